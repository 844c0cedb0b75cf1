"""Markdown rendering of a paired comparison (``comparison.md``)."""

from __future__ import annotations

import jinja2

from sparsedet.models.enums import ClassGroup, RunKind
from sparsedet.models.experiment import ComparisonReport, MetricSummary

# (summary key, display name, group) in table order
TABLE_ROWS: list[tuple[str, str, str]] = [
    *(
        (f"{group.value}.{metric}", label, group.value)
        for group in ClassGroup
        for metric, label in (("ap", "AP@0.5"), ("recall", "Recall@0.5"), ("background_rate", "Background rate"))
    ),
    ("map50", "mAP@0.5", "all"),
    ("mean_recall", "Recall@0.5", "all"),
]

_TEMPLATE = """\
# Comparison{% if name %}: {{ name }}{% endif %}

Seeds: {{ seeds | join(", ") }} ({{ ok }} of {{ total }} runs succeeded)

| Group | Metric | Baseline | CFPL | Δ |
| ----- | ------ | -------- | ---- | - |
{% for row in rows -%}
| {{ row.group }} | {{ row.label }} | {{ row.baseline }} | {{ row.cfpl }} | {{ row.delta }} |
{% endfor %}
Values are percentages, mean ± sample standard deviation over seeds.
{% if failures %}
## Failed runs

{% for run in failures -%}
- {{ run.kind }} seed {{ run.seed }}: {{ run.error }}
{% endfor %}
{%- endif %}
"""


def format_summary(summary: MetricSummary | None) -> str:
    if summary is None or summary.mean is None:
        return "n/a"
    if summary.std is None:
        return f"{100 * summary.mean:.2f}"
    return f"{100 * summary.mean:.2f} ± {100 * summary.std:.2f}"


def format_delta(delta: float | None) -> str:
    return "n/a" if delta is None else f"{100 * delta:+.2f}"


def render_comparison(report: ComparisonReport, name: str | None = None) -> str:
    """Side-by-side baseline/CFPL table with one row per group metric and delta column."""
    rows = []
    for key, label, group in TABLE_ROWS:
        base = report.summary.get(RunKind.BASELINE.value, {}).get(key)
        cfpl = report.summary.get(RunKind.CFPL.value, {}).get(key)
        if base is None and cfpl is None:
            continue
        rows.append(
            {
                "group": group,
                "label": label,
                "baseline": format_summary(base),
                "cfpl": format_summary(cfpl),
                "delta": format_delta(report.delta(key)),
            }
        )
    env = jinja2.Environment(autoescape=False, keep_trailing_newline=True)  # noqa: S701
    return env.from_string(_TEMPLATE).render(
        name=name,
        seeds=report.seeds,
        ok=sum(1 for r in report.runs if r.ok),
        total=len(report.runs),
        rows=rows,
        failures=[r for r in report.runs if not r.ok],
    )
