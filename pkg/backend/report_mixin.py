import csv
import io
import json
import math

import numpy as np

HISTOGRAM_BINS = 64
SUMMARY_NAME = "summary.json"


def _plain(value):
    """numpy scalars / arrays -> JSON-native values"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n"


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


class ReportPipeline:
    """
    Artifact side of a suite run: plot data, comparison tables, summaries.
    Expected to be mixed into a class with:
    - self.store (artifact store)
    - self._sparse_members(cfg) (method returning per-member sparse results)
    """

    def write_json(self, suite, name, obj):
        self.store.write_text(suite, name, dumps(obj))

    def write_table(self, suite, name, header, rows):
        self.store.write_text(suite, name, csv_text(header, rows))

    def emit_plot_data(self, report, suite, name):
        """
        `<name>.plot.csv`: cell midpoints, |Tf| and the bound, one row per cell;
        `<name>.hist.csv`: 64-bin histogram of the finite ratios |Tf|/bound.
        A missing or empty report gives header-only files.
        """
        dim = report.midpoints.shape[1] if report is not None and report.midpoints.ndim == 2 else 1
        coords = ["x"] if dim == 1 else [f"x{i + 1}" for i in range(dim)]
        rows = []
        counts, edges = np.zeros(0, dtype=int), np.zeros(0)
        if report is not None and report.cell_count:
            mids = report.midpoints.reshape(report.cell_count, -1)
            rows = [(*m, t, b) for m, t, b in zip(mids.tolist(), report.abs_tf.tolist(), report.bound.tolist())]
            finite = report.ratios[~np.isnan(report.ratios)]
            top = float(finite.max()) if finite.size else 0.0
            counts, edges = np.histogram(finite, bins=HISTOGRAM_BINS, range=(0.0, top if top > 0 else 1.0))
        self.write_table(suite, f"{name}.plot.csv", coords + ["abs_tf", "bound"], rows)
        self.write_table(
            suite, f"{name}.hist.csv", ["lo", "hi", "count"],
            [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)],
        )
        return len(rows)

    def emit_series(self, suite, name, header, rows):
        """(scale, constant)-style series for external plotting"""
        self.write_table(suite, f"{name}.series.csv", header, rows)

    def compare_bounds(self, cfgs):
        """
        One row per (config, corpus member): (member, oscBestConstant,
        avgBestConstant, interiorRatio, wholeRatio).
        """
        rows = []
        for cfg in cfgs:
            for member in self._sparse_members(cfg):
                rows.append({
                    "member": member.name,
                    "grid": cfg.grid,
                    "oscBestConstant": member.osc.best_constant,
                    "avgBestConstant": member.avg.best_constant,
                    "interiorRatio": member.interior,
                    "wholeRatio": member.whole,
                })
        return rows

    def load_summaries(self):
        return load_summaries(self.store)


def load_summaries(store):
    summaries = {}
    for suite in store.list_suites():
        if store.exists(suite, SUMMARY_NAME):
            summaries[suite] = json.loads(store.read_text(suite, SUMMARY_NAME))
    return summaries


def format_summary_table(summaries):
    """Plain-text table of suite summaries for `oscdom report`"""
    if not summaries:
        return "no suite summaries found\n"
    lines = [f"{'suite':<22} {'status':<7} {'checks':>7} {'failed':>7}  key results"]
    for suite, summary in sorted(summaries.items()):
        checks = summary.get("checks", [])
        failed = [c for c in checks if not c.get("passed")]
        keys = ", ".join(
            f"{k}={_short(v)}" for k, v in sorted(summary.get("results", {}).items())
            if isinstance(v, (int, float, str, bool))
        )
        status = "PASS" if not failed else "FAIL"
        lines.append(f"{suite:<22} {status:<7} {len(checks):>7} {len(failed):>7}  {keys}")
        for c in failed:
            lines.append(f"    [{c.get('module')}] {c.get('name')}: {c.get('detail')}")
    return "\n".join(lines) + "\n"


def _short(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.4g}"
    return str(v)
