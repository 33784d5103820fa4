"""Benchmark report output: TSV table, text summary and figures.

``write_bench_report`` writes the machine-readable table to the requested
path and places a human-readable summary plus rendered PNG charts next to
it.
"""

from __future__ import annotations

from pathlib import Path

from .pipeline import BenchReport

_TSV_COLUMNS = ("detector", "emotion", "sv_number", "margin", "correctness",
                "full_points", "pruned_points", "reduction")


def bench_tsv(report: BenchReport) -> str:
    lines = ["\t".join(_TSV_COLUMNS)]
    for row in report.rows:
        lines.append("\t".join([
            row.label,
            row.emotion.value,
            str(row.sv_count),
            f"{row.margin:.6g}",
            f"{row.correctness:.4f}",
            str(row.full_points),
            str(row.pruned_points),
            f"{row.reduction:.6f}",
        ]))
    return "\n".join(lines) + "\n"


def bench_summary(report: BenchReport) -> str:
    lines = []
    lines.append(f"{'Detector':<9}{'SV number':>10}{'Margin':>10}"
                 f"{'Correctness':>13}{'Points':>8}{'Pruned':>8}{'Reduction':>11}")
    for row in report.rows:
        lines.append(f"{row.label:<9}{row.sv_count:>10}{row.margin:>10.3f}"
                     f"{row.correctness:>12.1%}{row.full_points:>8}"
                     f"{row.pruned_points:>8}{row.reduction:>10.1%}")
    lines.append("")
    lines.append(f"samples benched        {report.samples}")
    lines.append(f"mean point reduction   {report.mean_reduction:.1%}")
    lines.append(f"accuracy (full path)   {report.accuracy_full:.1%}")
    lines.append(f"accuracy (pruned path) {report.accuracy_pruned:.1%}")
    lines.append(f"decision agreement     {report.agreement:.1%}")
    lines.append(f"wall time full path    {report.time_full_s:.4f} s "
                 f"({report.time_full_per_sample * 1e3:.3f} ms/sample)")
    lines.append(f"wall time pruned path  {report.time_pruned_s:.4f} s "
                 f"({report.time_pruned_per_sample * 1e3:.3f} ms/sample)")
    speedup = (report.time_full_s / report.time_pruned_s
               if report.time_pruned_s > 0 else float("inf"))
    lines.append(f"pruned speedup         {speedup:.2f}x")
    return "\n".join(lines) + "\n"


def render_figures(report: BenchReport, stem: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    labels = [row.label for row in report.rows]

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(labels, [row.reduction * 100 for row in report.rows], color="#4878a8")
    ax.axhline(report.mean_reduction * 100, color="#a84848", linestyle="--",
               label=f"mean {report.mean_reduction:.1%}")
    ax.set_ylabel("feature-point reduction (%)")
    ax.set_ylim(0, 100)
    ax.legend(loc="lower right")
    fig.tight_layout()
    path = stem.with_name(stem.name + "_reduction.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    times = [report.time_full_per_sample * 1e3, report.time_pruned_per_sample * 1e3]
    ax.bar(["full", "pruned"], times, color=["#a84848", "#4878a8"])
    ax.set_ylabel("wall time per sample (ms)")
    fig.tight_layout()
    path = stem.with_name(stem.name + "_timing.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def write_bench_report(report: BenchReport, path: "str | Path") -> list[Path]:
    """Write the TSV, its text summary and the charts; returns written paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(bench_tsv(report))
    stem = path.with_suffix("")
    summary_path = stem.with_name(stem.name + "_summary.txt")
    summary_path.write_text(bench_summary(report))
    written = [path, summary_path]
    written.extend(render_figures(report, stem))
    return written
