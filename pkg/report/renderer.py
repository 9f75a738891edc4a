"""
Report renderer: metric tables as CSV, plain text, Markdown, HTML and JSON.
HTML and Markdown use the Jinja2 templates in report/templates when Jinja2 is available.
"""

from typing import Optional, List, Dict, Any, Sequence
from scoring.models import MetricReport
import os
import importlib.util
import json
import io
import csv
from html import escape

CSV_COLUMNS = ('horizon_minutes', 'model', 'mae', 'mape', 'rmse', 'n')
SERIES_COLUMNS = ('timestamp', 'station', 'horizon_minutes', 'truth', 'stgcn', 'ha')


def _fmt(value: float, digits: int = 4) -> str:
    return 'nan' if value != value else f"{value:.{digits}f}"


def _ordered(reports: Sequence[MetricReport]) -> List[MetricReport]:
    """Stable order: by horizon, then model name."""
    return sorted(reports, key=lambda r: (r.horizon_minutes, r.model))


def render_csv(reports: Sequence[MetricReport]) -> str:
    """CSV with header horizon_minutes,model,mae,mape,rmse,n; floats use repr so files are reproducible."""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for r in _ordered(reports):
        writer.writerow([r.horizon_minutes, r.model, repr(r.mae), repr(r.mape), repr(r.rmse), r.n])
    return output.getvalue()


def render_text(reports: Sequence[MetricReport]) -> str:
    """Fixed-width table for the terminal."""
    header = f"{'horizon':>8}  {'model':<10} {'MAE':>9} {'MAPE%':>9} {'RMSE':>9} {'n':>9}"
    lines = [header, '-' * len(header)]
    for r in _ordered(reports):
        lines.append(f"{str(r.horizon_minutes) + ' min':>8}  {r.model:<10} {_fmt(r.mae):>9} {_fmt(r.mape, 2):>9} {_fmt(r.rmse):>9} {r.n:>9}")
    excluded = sum(r.mape_excluded for r in reports)
    if excluded:
        lines.append(f"(MAPE excludes {excluded} near-zero truth value(s))")
    return "\n".join(lines)


def _rows(reports: Sequence[MetricReport]) -> List[Dict[str, Any]]:
    return [
        {
            'horizon_minutes': r.horizon_minutes,
            'model': r.model,
            'mae': _fmt(r.mae),
            'mape': _fmt(r.mape, 2),
            'rmse': _fmt(r.rmse),
            'n': r.n,
            'mape_excluded': r.mape_excluded,
        }
        for r in _ordered(reports)
    ]


def render_markdown_fallback(reports: Sequence[MetricReport], title: str = 'Forecast Metrics') -> str:
    md = [f"# {title}\n", "| Horizon (min) | Model | MAE | MAPE (%) | RMSE | n |", "|---:|---|---:|---:|---:|---:|"]
    for row in _rows(reports):
        md.append(f"| {row['horizon_minutes']} | {row['model']} | {row['mae']} | {row['mape']} | {row['rmse']} | {row['n']} |")
    return "\n".join(md)


def render_html_fallback(reports: Sequence[MetricReport], title: str = 'Forecast Metrics', summary: Optional[dict] = None) -> str:
    """Simple HTML table used when Jinja2 is unavailable."""
    html = ["<html><body>", f"<h1>{escape(title)}</h1>"]
    if not reports:
        html.append("<p>No metrics available.</p>")
    else:
        html.append("<table>")
        html.append("<tr><th>Horizon (min)</th><th>Model</th><th>MAE</th><th>MAPE (%)</th><th>RMSE</th><th>n</th></tr>")
        for row in _rows(reports):
            html.append(f"<tr><td>{row['horizon_minutes']}</td><td>{row['model']}</td><td>{row['mae']}</td><td>{row['mape']}</td><td>{row['rmse']}</td><td>{row['n']}</td></tr>")
        html.append("</table>")
    if summary:
        html.append("<h3>Run</h3>")
        html.append("<pre>" + json.dumps(summary, indent=2, sort_keys=True) + "</pre>")
    html.append("</body></html>")
    return "\n".join(html)


def _jinja_template(name: str):
    from jinja2 import Environment, FileSystemLoader, select_autoescape

    tmpl_dir = os.path.join(os.path.dirname(__file__), 'templates')
    env = Environment(loader=FileSystemLoader(tmpl_dir), autoescape=select_autoescape(['html', 'xml', 'html.j2']))
    return env.get_template(name)


def _render_with_template(name: str, reports: Sequence[MetricReport], title: str, summary: Optional[dict]) -> Optional[str]:
    """Render through a Jinja2 template, or None when Jinja2 is not installed."""
    if importlib.util.find_spec('jinja2') is None:
        return None
    tmpl = _jinja_template(name)
    return tmpl.render(title=title, rows=_rows(reports), summary=summary or {})


def render_markdown(reports: Sequence[MetricReport], title: str = 'Forecast Metrics', summary: Optional[dict] = None) -> str:
    rendered = _render_with_template('report.md.j2', reports, title, summary)
    return rendered if rendered is not None else render_markdown_fallback(reports, title)


def render_html(reports: Sequence[MetricReport], title: str = 'Forecast Metrics', summary: Optional[dict] = None) -> str:
    rendered = _render_with_template('report.html.j2', reports, title, summary)
    return rendered if rendered is not None else render_html_fallback(reports, title, summary)


def render_json(reports: Sequence[MetricReport]) -> str:
    return json.dumps([r.to_dict() for r in _ordered(reports)], indent=2)


def render(reports: Sequence[MetricReport], fmt: str = 'text', title: str = 'Forecast Metrics', summary: Optional[dict] = None) -> str:
    """Main render function; unknown formats render as text."""
    fmt_l = (fmt or 'text').lower()
    if fmt_l in ('md', 'markdown'):
        return render_markdown(reports, title, summary)
    if fmt_l == 'csv':
        return render_csv(reports)
    if fmt_l in ('html', 'htm'):
        return render_html(reports, title, summary)
    if fmt_l in ('json', 'js'):
        return render_json(reports)
    return render_text(reports)


def render_series_csv(rows: Sequence[Sequence[Any]]) -> str:
    """Per-timestamp forecast rows: timestamp,station,horizon_minutes,truth,stgcn,ha."""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(SERIES_COLUMNS)
    for row in rows:
        writer.writerow(row)
    return output.getvalue()


__all__ = [
    "render",
    "render_csv",
    "render_text",
    "render_markdown",
    "render_html",
    "render_json",
    "render_series_csv",
    "CSV_COLUMNS",
    "SERIES_COLUMNS",
]
