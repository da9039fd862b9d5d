"""CSV and JSON writers for sweep results."""
import csv
import json
import math

from .sweep import ResultRow

CSV_COLUMNS = ("method", "snr_db", "M", "nmse", "ber", "trials", "wall_time_s", "seed")


def fmt(x):
    """Nine significant digits; ``nan`` for missing values."""
    x = float(x)
    return "nan" if math.isnan(x) else format(x, ".9g")


def _json_float(x):
    x = float(x)
    return None if math.isnan(x) else float(format(x, ".9g"))


def write_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.method, fmt(r.snr_db), r.M, fmt(r.nmse), fmt(r.ber), r.trials,
                    fmt(r.wall_time_s), r.seed])


def read_csv(fh):
    out = []
    for d in csv.DictReader(fh):
        out.append(ResultRow(method=d["method"], snr_db=float(d["snr_db"]), M=int(d["M"]),
                             nmse=float(d["nmse"]), ber=float(d["ber"]), trials=int(d["trials"]),
                             wall_time_s=float(d["wall_time_s"]), seed=int(d["seed"])))
    return out


def rows_to_json(rows, meta=None):
    recs = [{"method": r.method, "snr_db": _json_float(r.snr_db), "M": r.M,
             "nmse": _json_float(r.nmse), "ber": _json_float(r.ber), "trials": r.trials,
             "wall_time_s": _json_float(r.wall_time_s), "seed": r.seed, "failures": r.failures}
            for r in rows]
    return {"meta": meta or {}, "rows": recs}


def write_json(rows, fh, meta=None):
    json.dump(rows_to_json(rows, meta), fh, indent=2, sort_keys=True)
    fh.write("\n")
