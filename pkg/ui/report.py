"""
Plain-text rendering of API events and JSON run artifacts.
"""

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List

from ui.helpers import format_number, format_vector, short_path
from utils.io_utils import read_json

_EVENT_TAGS = {
    "tune_start": "TUNE",
    "tune_done": "TUNE",
    "scenario_start": "SIM",
    "scenario_done": "SIM",
    "scenario_failed": "FAIL",
    "verify_done": "VERIFY",
    "support_row": "SUPPORT",
    "warning": "WARN",
}


def render_events(events: List[Dict[str, Any]], limit: int = 200) -> str:
    """
    Render events as log lines, oldest first.

    Args:
        events: event dictionaries with ``timestamp``, ``type`` and ``message``
        limit: keep only the most recent ``limit`` events

    Returns:
        newline-joined text
    """
    if not events:
        return "No events."
    ordered = sorted(events, key=lambda e: e.get("timestamp", 0))[-limit:]
    lines = []
    for event in ordered:
        timestamp = event.get("timestamp", 0)
        try:
            time_str = datetime.fromtimestamp(timestamp).strftime("%H:%M:%S.%f")[:-3]
        except (TypeError, ValueError, OSError):
            time_str = str(timestamp)
        tag = _EVENT_TAGS.get(event.get("type", ""), "INFO")
        lines.append(f"{time_str} [{tag}] {event.get('message', '')}")
    return "\n".join(lines)


def _render_tuning(payload: Dict[str, Any]) -> List[str]:
    params = payload.get("params") or {}
    lines = [
        f"  status          {payload.get('status')}",
        f"  eps0            {format_number(params.get('eps0'))}",
        f"  ln_eps0         {format_number(params.get('ln_eps0'))}",
        f"  lambda          {format_number(params.get('lambda'))}",
        f"  min_margin      {format_number(payload.get('min_margin'))}",
        f"  kappa nominal   {format_number(payload.get('kappa_nominal'))}",
        f"  kappa effective {format_number(payload.get('kappa_effective'))}",
        f"  samples         {payload.get('n_samples')} ({len(payload.get('exclusions', []))} excluded)",
    ]
    lines += [f"  warning: {w}" for w in payload.get("warnings", [])]
    return lines


def _render_verify(payload: Dict[str, Any]) -> List[str]:
    return [
        f"  min_margin      {format_number(payload.get('min_margin'))}",
        f"  worst_state     {format_vector(payload.get('worst_state'))}",
        f"  violations      {payload.get('n_violations', len(payload.get('violations', [])))}",
        f"  kappa effective {format_number(payload.get('kappa_effective'))}",
    ]


def _render_summary(payload: Dict[str, Any], max_rows: int) -> List[str]:
    summary = payload.get("summary", {})
    lines = [
        f"  status          {payload.get('status')}",
        f"  controller      {payload.get('controller', {}).get('kind')}",
        f"  records         {summary.get('records')}",
        f"  min h           {format_number(summary.get('min_h'))}",
        f"  min h+zeta      {format_number(summary.get('min_h_plus_zeta'))}",
        f"  max |u|         {format_vector(summary.get('max_abs_u'))}",
        f"  input viol.     {summary.get('input_violations')}",
        f"  qp infeasible   {summary.get('qp_infeasible')}",
    ]
    for state, info in (summary.get("negative_state_excursions") or {}).items():
        lines.append(f"  {state} < 0        {info.get('count')} records (min {format_number(info.get('min'))})")
    for attempt in payload.get("attempts", [])[:max_rows]:
        lines.append(f"  trial eps0={format_number(attempt.get('eps0'))} "
                     f"lambda={format_number(attempt.get('lambda'))} accepted={attempt.get('accepted')}")
    return lines


def render_artifact(name: str, payload: Dict[str, Any], max_rows: int = 20) -> str:
    """Digest of one JSON artifact, chosen by its ``metadata.command``."""
    command = (payload.get("metadata") or {}).get("command", "")
    lines = [f"== {short_path(name)} ({command or 'unknown'})"]
    if command == "tune":
        lines += _render_tuning(payload)
    elif command == "verify":
        lines += _render_verify(payload)
    elif command == "simulate":
        lines += _render_summary(payload, max_rows)
    else:
        lines.append("  (no renderer for this artifact)")
    return "\n".join(lines)


def render_directory(directory: Path, max_rows: int = 20) -> str:
    """Render every JSON artifact below ``directory`` in path order."""
    directory = Path(directory)
    paths = sorted(p for p in directory.rglob("*.json") if p.is_file())
    if not paths:
        return f"No JSON artifacts under {directory}."
    blocks = []
    for path in paths:
        try:
            payload = read_json(path)
        except (OSError, json.JSONDecodeError) as exc:
            blocks.append(f"== {short_path(str(path))}\n  unreadable: {exc}")
            continue
        if isinstance(payload, dict):
            blocks.append(render_artifact(str(path.relative_to(directory)), payload, max_rows))
    return "\n\n".join(blocks)
