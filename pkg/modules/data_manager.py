"""
Data management module
Handles report assembly, JSON output, Excel export with formatting and the stderr summary
"""

import hashlib
import json
import math
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence
import os
import logging
import sys

import numpy as np
import pandas as pd
import openpyxl
from openpyxl.styles import Font, PatternFill, Alignment

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config
from modules.exterior import ExtElem, MultiIndex
from modules.poly import GaussRat, Poly, to_string

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)

SUMMARY_SHEET = 'Summary'


def to_jsonable(value):
    """Convert results into plain JSON types; complex numbers become [re, im] pairs."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return value
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, (Fraction, GaussRat)):
        return str(value)
    if isinstance(value, Poly):
        return to_string(value)
    if isinstance(value, MultiIndex):
        return value.key()
    if isinstance(value, ExtElem):
        return {I.key(): to_jsonable(c) for I, c in value.coeffs.items()}
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {(k.key() if isinstance(k, MultiIndex) else str(k)): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if is_dataclass(value):
        return to_jsonable(asdict(value))
    raise TypeError(f"Cannot serialise {type(value).__name__} into a report")


def inputs_digest(*parts: str) -> str:
    """sha256 over the input digests and options that determine a report."""
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode('utf-8'))
        digest.update(b'\0')
    return digest.hexdigest()


def build_report(command: Dict, digest: str, results: Dict, warnings: Sequence[str],
                 wall_time: Optional[float] = None) -> Dict:
    """
    Assemble the report object.

    Args:
        command: Echo of the subcommand and its effective options
        digest: Inputs digest
        results: Per-command payload
        warnings: Messages collected while running
        wall_time: Seconds, only included when timing was requested

    Returns:
        Report dictionary with JSON-ready values
    """
    report = {
        'schema_version': config.SCHEMA_VERSION,
        'command': to_jsonable(command),
        'inputs_digest': digest,
        'results': to_jsonable(results),
        'warnings': list(warnings),
    }
    if wall_time is not None:
        report['wall_time'] = round(float(wall_time), 6)
    return report


def dumps_report(report: Dict) -> str:
    return json.dumps(report, indent=config.JSON_INDENT, sort_keys=True, ensure_ascii=False) + '\n'


def write_json(report: Dict, output_path: str) -> str:
    """Write the report with sorted keys so equal inputs give equal bytes."""
    logger.info(f"Writing JSON report: {output_path}")
    with open(output_path, 'w', encoding='utf-8') as handle:
        handle.write(dumps_report(report))
    return output_path


def _tables(results: Dict) -> Dict[str, List[Dict]]:
    """Every list of flat records in the results becomes its own sheet."""
    tables = {}
    for key, value in results.items():
        if isinstance(value, list) and value and all(isinstance(row, dict) for row in value):
            tables[key[:31]] = value
    return tables


def create_summary_sheet(writer, report: Dict):
    """Create summary information sheet from scalar results."""
    rows = [('command', report['command'].get('name', '')), ('inputs_digest', report['inputs_digest'])]
    for key, value in sorted(report['results'].items()):
        if isinstance(value, (str, int, float, bool)) or value is None:
            rows.append((key, value))
        elif isinstance(value, dict):
            for inner, inner_value in sorted(value.items()):
                if isinstance(inner_value, (str, int, float, bool)):
                    rows.append((f"{key}.{inner}", inner_value))
    for message in report['warnings']:
        rows.append(('warning', message))
    pd.DataFrame(rows, columns=['Metric', 'Value']).to_excel(writer, sheet_name=SUMMARY_SHEET, index=False)


def create_table_sheet(writer, name: str, rows: List[Dict]):
    """One sheet per per-point or per-step table; nested values are written as JSON text."""
    df = pd.DataFrame(rows)
    for column in df.columns:
        if df[column].map(lambda v: isinstance(v, (list, dict))).any():
            df[column] = df[column].map(lambda v: json.dumps(v, sort_keys=True))
    df.to_excel(writer, sheet_name=name, index=False)


def export_to_excel(report: Dict, output_path: str) -> str:
    """
    Export a report to a formatted Excel workbook.

    Args:
        report: Report produced by build_report
        output_path: Path to save Excel file

    Returns:
        Path to saved file
    """
    logger.info(f"Exporting report to Excel: {output_path}")

    with pd.ExcelWriter(output_path, engine=config.EXCEL_ENGINE) as writer:
        create_summary_sheet(writer, report)
        for name, rows in _tables(report['results']).items():
            create_table_sheet(writer, name, rows)

    apply_excel_formatting(output_path)

    logger.info(f"Excel file saved: {output_path}")
    return output_path


def apply_excel_formatting(filepath: str):
    """Apply formatting to Excel workbook."""
    wb = openpyxl.load_workbook(filepath)

    for sheet_name in wb.sheetnames:
        ws = wb[sheet_name]
        format_headers(ws)
        auto_adjust_columns(ws)

        # Freeze top row
        ws.freeze_panes = 'A2'

    wb.save(filepath)


def format_headers(ws):
    """Format header row."""
    header_fill = PatternFill(start_color='4F81BD', end_color='4F81BD', fill_type='solid')
    header_font = Font(bold=True, color='FFFFFF')

    for cell in ws[1]:
        cell.fill = header_fill
        cell.font = header_font
        cell.alignment = Alignment(horizontal='center', vertical='center')


def auto_adjust_columns(ws):
    """Auto-adjust column widths."""
    for column in ws.columns:
        column_letter = column[0].column_letter
        max_length = max((len(str(cell.value)) for cell in column if cell.value is not None), default=0)
        ws.column_dimensions[column_letter].width = min(max_length + 2, 50)  # Cap at 50


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def format_summary(report: Dict, exit_code: int = config.EXIT_OK) -> str:
    """
    Generate the human-readable summary written to stderr.

    Args:
        report: Report produced by build_report
        exit_code: Exit code the command is about to return

    Returns:
        Formatted multi-line summary
    """
    lines = []
    lines.append("=" * 80)
    lines.append(f"KOSZUL TOOLKIT REPORT: {report['command'].get('name', '').upper()}")
    lines.append("=" * 80)
    lines.append(f"Inputs digest: {report['inputs_digest']}")
    lines.append(f"Exit code: {exit_code}")
    lines.append("")

    results = report['results']
    tables = _tables(results)
    lines.append("RESULTS")
    lines.append("-" * 80)
    for key in sorted(results):
        if key in tables:
            lines.append(f"  {key}: {len(tables[key])} rows")
        elif isinstance(results[key], dict):
            lines.append(f"  {key}:")
            for inner, value in sorted(results[key].items()):
                lines.append(f"    {inner}: {_format_value(value)}")
        else:
            lines.append(f"  {key}: {_format_value(results[key])}")

    if report['warnings']:
        lines.append("")
        lines.append("WARNINGS")
        lines.append("-" * 80)
        for message in report['warnings']:
            lines.append(f"  ! {message}")

    if 'wall_time' in report:
        lines.append("")
        lines.append(f"Wall time: {report['wall_time']:.3f} s")
    lines.append("=" * 80)
    return "\n".join(lines)


if __name__ == "__main__":
    test_report = build_report(
        {'name': 'exactness'}, inputs_digest('demo'),
        {'points': [{'z': [0.5, 0.0], 'E': 1.25, 's_norm2': 1.25, 'agree': True}], 'all_agree': True},
        [],
    )
    print(format_summary(test_report))
    output = 'test_output.xlsx'
    export_to_excel(test_report, output)
    print(f"Test Excel file created: {output}")
