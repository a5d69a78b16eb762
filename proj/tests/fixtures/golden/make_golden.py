"""Independent reference for the ingest golden test.

Reads the three CSVs next to this script and writes expected.json with the
records the loader should produce (threshold 1, min history 5, default
population 1e6).
"""

import csv
import datetime as dt
import json
import statistics
from pathlib import Path

HERE = Path(__file__).parent
THRESHOLD = 1.0
MIN_DAYS = 5
DEFAULT_POP = 1e6


def rows(name):
    with open(HERE / name, newline="") as f:
        return list(csv.reader(f))


def day(s):
    return dt.date.fromisoformat(s)


feat = rows("features.csv")
header, body = feat[0], feat[1:]
value_cols = [c for c in header[1:] if c not in ("population", "parent_country")]
raw = {r[0]: {h: r[i] for i, h in enumerate(header)} for r in body}
order = [r[0] for r in body]

features = {rid: [] for rid in order}
imputed = {rid: [] for rid in order}
kept = []
for col in value_cols:
    present = [float(raw[r][col]) for r in order if raw[r][col] != ""]
    if not present:
        continue
    kept.append(col)
    med = statistics.median(present)
    vals = [float(raw[r][col]) if raw[r][col] != "" else med for r in order]
    mu = statistics.fmean(vals)
    sd = statistics.pstdev(vals)
    for r, v in zip(order, vals):
        features[r].append((v - mu) / sd if sd > 0 else v - mu)
        imputed[r].append(raw[r][col] == "")

deaths = {}
for r in rows("fatalities.csv")[1:]:
    deaths.setdefault(r[0], {})[day(r[1])] = float(r[2])

pol_rows = rows("policies.csv")
indicators = pol_rows[0][2:]
policies = {}
for r in pol_rows[1:]:
    policies.setdefault(r[0], {})[day(r[1])] = [float(v) for v in r[2:]]
col_max = [max(p[k] for reg in policies.values() for p in reg.values()) for k in range(len(indicators))]
for reg in policies.values():
    for d, p in reg.items():
        reg[d] = [v / m if m > 1 else v for v, m in zip(p, col_max)]


def policy_on(reg, d):
    known = [k for k in sorted(reg) if k <= d]
    return reg[known[-1]] if known else [0.0] * len(indicators)


regions, dropped = [], []
for rid in order:
    series = deaths.get(rid, {})
    first, last = min(series), max(series)
    cum, prev, repairs = [], 0.0, 0
    d = first
    while d <= last:
        v = series.get(d)
        if v is None:
            v = prev
        elif v < prev:
            repairs += 1
            v = prev
        cum.append(v)
        prev = v
        d += dt.timedelta(days=1)
    start = next(i for i, v in enumerate(cum) if v >= THRESHOLD)
    if len(cum) - start < MIN_DAYS:
        dropped.append(rid)
        continue
    outbreak = first + dt.timedelta(days=start)
    n = len(cum) - start
    reg = policies[rid]
    future_end = max(reg)
    regions.append({
        "region_id": rid,
        "parent_country": raw[rid]["parent_country"] or None,
        "population": float(raw[rid]["population"]) if raw[rid]["population"] else DEFAULT_POP,
        "features": features[rid],
        "imputed": imputed[rid],
        "fatalities": cum[start:],
        "outbreak_date": outbreak.isoformat(),
        "policy": [policy_on(reg, outbreak + dt.timedelta(days=k)) for k in range(n)],
        "future_policy": [policy_on(reg, last + dt.timedelta(days=k))
                          for k in range(1, (future_end - last).days + 1)],
        "repairs": repairs,
    })

out = {"feature_names": kept, "indicator_names": indicators, "regions": regions, "dropped": dropped}
(HERE / "expected.json").write_text(json.dumps(out, indent=1) + "\n")
