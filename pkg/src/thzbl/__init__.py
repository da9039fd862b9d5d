"""Sparse Bayesian channel estimation for dual-wideband THz hybrid MIMO."""
from .channel import PhysicalConfig, ReflectingMedium, assemble_channel, sample_paths, steering_vector
from .dabl import DataAidedBL, dabl_estimate
from .estimators import (FOCUSS, LeastSquaresEstimator, LinearMMSEEstimator,
                         OrthogonalMatchingPursuit)
from .frame import SystemConfig, make_data_frame, make_pilot_frame, measure
from .pabl import PilotAidedBL, bcrlb_pa, pabl_estimate
from .sparsemodel import AngularGrid, build_dictionaries

__version__ = "0.1.0"

__all__ = ["PhysicalConfig", "ReflectingMedium", "assemble_channel", "sample_paths",
           "steering_vector", "DataAidedBL", "dabl_estimate", "FOCUSS", "LeastSquaresEstimator",
           "LinearMMSEEstimator", "OrthogonalMatchingPursuit", "SystemConfig", "make_data_frame",
           "make_pilot_frame", "measure", "PilotAidedBL", "bcrlb_pa", "pabl_estimate",
           "AngularGrid", "build_dictionaries"]
