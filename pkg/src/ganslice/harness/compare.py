"""Ranked comparison of finished runs."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .experiment import ConfigError

SLICE_KEYS = ("volte", "video", "urllc")
REPORT_FIELDS = (
    "rank", "name", "algo", "seed", "mean_utility", "gap", "gap_pct", "mean_se",
    *(f"ssr_{k}" for k in SLICE_KEYS),
)


class CompareError(ConfigError):
    """Runs cannot be compared (too few, or different environments)."""


@dataclass(frozen=True)
class ReportRow:
    rank: int
    name: str
    algo: str
    seed: int | None
    mean_utility: float
    gap: float
    gap_pct: float | None
    mean_se: float
    ssr: tuple[float, float, float]

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in REPORT_FIELDS[:8]}
        d.update({f"ssr_{k}": v for k, v in zip(SLICE_KEYS, self.ssr)})
        return d


@dataclass
class Report:
    rows: list[ReportRow]
    baseline: str
    env_fingerprint: str

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for r in self.rows:
            d = r.as_dict()
            w.writerow(["" if d[k] is None else (repr(d[k]) if isinstance(d[k], float) else d[k])
                        for k in REPORT_FIELDS])
        return buf.getvalue()

    def to_text(self) -> str:
        head = f"{'rank':>4}  {'run':<24} {'algo':<9} {'utility':>9} {'gap':>8} {'gap%':>7} {'SE':>8}"
        head += "".join(f" {'SSR ' + k:>10}" for k in SLICE_KEYS)
        lines = [f"env {self.env_fingerprint}, gap measured against {self.baseline}", head]
        for r in self.rows:
            pct = "n/a" if r.gap_pct is None else f"{r.gap_pct:+.1f}"
            line = (f"{r.rank:>4}  {r.name[:24]:<24} {r.algo:<9} {r.mean_utility:>9.4f} "
                    f"{r.gap:>+8.4f} {pct:>7} {r.mean_se:>8.2f}")
            line += "".join(f" {s:>10.4f}" for s in r.ssr)
            lines.append(line)
        return "\n".join(lines) + "\n"


def load_summary(run: str | Path | dict) -> dict:
    """Accept a summary dict, a run directory or a summary.json path."""
    if isinstance(run, dict):
        return run
    p = Path(run)
    if p.is_dir():
        p = p / "summary.json"
    with open(p) as fh:
        return json.load(fh)


def _competition_ranks(values: list[float]) -> list[int]:
    # "1224" ranking: equal utilities share the better rank
    order = sorted(range(len(values)), key=lambda i: -values[i])
    ranks = [0] * len(values)
    for pos, i in enumerate(order):
        if pos > 0 and values[i] == values[order[pos - 1]]:
            ranks[i] = ranks[order[pos - 1]]
        else:
            ranks[i] = pos + 1
    return ranks


def compare(runs) -> Report:
    """Rank runs by last-window mean utility.

    The gap column is measured against the hard-slicing run when one is
    present (the best one if there are several) and against the lowest
    ranked run otherwise.
    """
    summaries = [load_summary(r) for r in runs]
    if len(summaries) < 2:
        raise CompareError("compare needs at least two runs")
    prints = {s.get("env_fingerprint") for s in summaries}
    if len(prints) != 1 or None in prints:
        raise CompareError(f"runs use different environments: {sorted(map(str, prints))}")
    utils = [float(s["mean_utility"]) for s in summaries]
    ranks = _competition_ranks(utils)
    hard = [i for i, s in enumerate(summaries) if s.get("algo") == "hard"]
    pool = hard or range(len(summaries))
    base = max(pool, key=lambda i: utils[i]) if hard else min(pool, key=lambda i: utils[i])
    b = utils[base]
    rows = []
    for i, s in enumerate(summaries):
        ssr = s["mean_ssr"]
        rows.append(ReportRow(
            rank=ranks[i],
            name=str(s.get("name", f"run{i}")),
            algo=str(s.get("algo", "?")),
            seed=s.get("seed"),
            mean_utility=utils[i],
            gap=utils[i] - b,
            gap_pct=None if b == 0 else 100.0 * (utils[i] - b) / abs(b),
            mean_se=float(s["mean_se"]),
            ssr=tuple(float(ssr[k]) for k in SLICE_KEYS),
        ))
    rows.sort(key=lambda r: (r.rank, r.name))
    return Report(rows, baseline=str(summaries[base].get("name", f"run{base}")), env_fingerprint=prints.pop())

