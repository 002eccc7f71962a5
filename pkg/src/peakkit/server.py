"""Local review server for the audit workbench.

Serves a built audit bundle plus the segment waveforms it refers to, and
accepts reviewer labels over HTTP. Binds loopback by default. Endpoints:

* ``GET  /bundle``        - bundle records, checks, labels, summary.
* ``GET  /segment/{id}``  - waveform + candidates + output for one record.
* ``POST /label``         - ``{record_id, reviewer_id, label}``; appends to
                            the label log unless identical to the last
                            logged event for that (record, reviewer).
* ``POST /score``         - ``{record_id, raw?}``; reward breakdown.
* ``GET  /<file>``        - static workbench assets, when a directory is
                            configured.

Label writes are serialized under a lock; the log is append-only JSONL so
a crashed session can be replayed.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Mapping

from .audit import (
    LABELS,
    AuditBundle,
    LabelEvent,
    append_label_line,
    parse_with_expected,
    read_label_log,
    record_label,
    replay_labels,
)
from .errors import InvalidLabel, UnknownRecord
from .representation import extract_extrema, timestamp_to_index
from .rewards import score_output
from .segments import Modality, SignalSegment

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


@dataclass
class ReviewState:
    """Mutable server-side state shared across request threads."""

    bundle: AuditBundle
    segments: Mapping[str, SignalSegment]
    label_log_path: Path
    seconds_per_sample: object = 1
    min_distance: int = 0
    static_dir: Path | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @classmethod
    def load(cls, bundle: AuditBundle, segments: Mapping[str, SignalSegment],
             label_log_path: str | Path, *, seconds_per_sample: object = 1,
             min_distance: int = 0, static_dir: str | Path | None = None) -> "ReviewState":
        path = Path(label_log_path)
        if path.exists():
            bundle = replay_labels(bundle, read_label_log(path))
        return cls(bundle=bundle, segments=dict(segments), label_log_path=path,
                   seconds_per_sample=seconds_per_sample, min_distance=min_distance,
                   static_dir=Path(static_dir) if static_dir else None)

    def last_event_for(self, record_id: str, reviewer_id: str) -> LabelEvent | None:
        for event in reversed(self.bundle.label_log):
            if event.record_id == record_id and event.reviewer_id == reviewer_id:
                return event
        return None

    def apply_label(self, record_id: str, reviewer_id: str, label: str) -> dict:
        with self.lock:
            self.bundle.find(record_id)  # raises UnknownRecord
            if label not in LABELS:
                raise InvalidLabel(f"label must be one of {LABELS}, got {label!r}")
            last = self.last_event_for(record_id, reviewer_id)
            if last is not None and last.label == label:
                return {"status": "unchanged", "summary": self.bundle.summary}
            self.bundle = record_label(self.bundle, record_id, label, reviewer_id)
            append_label_line(self.label_log_path, self.bundle.label_log[-1])
            return {"status": "recorded", "summary": self.bundle.summary}

    def segment_payload(self, record_id: str) -> dict:
        record = self.bundle.find(record_id)
        seg = self.segments.get(record.segment_ref)
        if seg is None:
            raise UnknownRecord(f"no segment {record.segment_ref!r} on this server")
        rep = extract_extrema(seg, min_distance=self.min_distance,
                              seconds_per_sample=self.seconds_per_sample)
        output = parse_with_expected(record.raw_output, seg.modality)
        pred_indices: list[int] = []
        if output.ok:
            try:
                pred_indices = [timestamp_to_index(t, self.seconds_per_sample)
                                for t in output.timestamps]
            except Exception:
                pred_indices = []
        return {
            "record_id": record.record_id,
            "segment_ref": record.segment_ref,
            "modality": Modality(seg.modality).value,
            "fs": seg.fs,
            "samples": [float(v) for v in seg.samples],
            "gt_peaks": [int(g) for g in seg.gt_peaks],
            "candidates": [
                {"index": e.index, "amplitude": e.amplitude,
                 "timestamp": e.timestamp, "polarity": e.polarity.value}
                for e in rep.entries
            ],
            "output": {
                "ok": output.ok,
                "failure": output.failure,
                "peak_label": output.peak_label,
                "timestamps": list(output.timestamps),
                "explanation": output.explanation,
            },
            "pred_indices": pred_indices,
            "checks": record.checks.to_dict(),
            "label": record.label,
            "reviewer_id": record.reviewer_id,
        }

    def score_payload(self, record_id: str, raw: str | None) -> dict:
        record = self.bundle.find(record_id)
        seg = self.segments.get(record.segment_ref)
        if seg is None:
            raise UnknownRecord(f"no segment {record.segment_ref!r} on this server")
        from .audit import EXPECTED_LABELS
        text = record.raw_output if raw is None else raw
        output, breakdown = score_output(
            text, seg.gt_peaks, seg.fs,
            expected_label=EXPECTED_LABELS[Modality(seg.modality)],
            seconds_per_sample=self.seconds_per_sample)
        return {
            "record_id": record_id,
            "parse_ok": output.ok,
            "r_format": breakdown.r_format,
            "r_detection": breakdown.r_detection,
            "r_complete": breakdown.r_complete,
            "r_hr": breakdown.r_hr,
            "total": breakdown.total,
        }


class _ReviewHandler(BaseHTTPRequestHandler):
    state: ReviewState  # set on the subclass built in make_server

    protocol_version = "HTTP/1.1"

    def log_message(self, fmt: str, *args: object) -> None:  # quiet by default
        pass

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str) -> None:
        self._send_json({"error": message}, status=status)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        doc = json.loads(raw.decode("utf-8"))
        if not isinstance(doc, dict):
            raise ValueError("body must be a JSON object")
        return doc

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        path = self.path.split("?", 1)[0]
        try:
            if path == "/bundle":
                self._send_json(self.state.bundle.to_dict())
            elif path.startswith("/segment/"):
                record_id = path[len("/segment/"):]
                self._send_json(self.state.segment_payload(record_id))
            else:
                self._serve_static(path)
        except UnknownRecord as exc:
            self._send_error_json(404, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            self._send_error_json(500, str(exc))

    def do_POST(self) -> None:  # noqa: N802
        path = self.path.split("?", 1)[0]
        try:
            doc = self._read_body()
            if path == "/label":
                result = self.state.apply_label(
                    str(doc.get("record_id", "")),
                    str(doc.get("reviewer_id", "")),
                    str(doc.get("label", "")))
                self._send_json(result)
            elif path == "/score":
                raw = doc.get("raw")
                result = self.state.score_payload(
                    str(doc.get("record_id", "")),
                    None if raw is None else str(raw))
                self._send_json(result)
            else:
                self._send_error_json(404, f"no such endpoint: {path}")
        except UnknownRecord as exc:
            self._send_error_json(404, str(exc))
        except InvalidLabel as exc:
            self._send_error_json(400, str(exc))
        except (ValueError, KeyError) as exc:
            self._send_error_json(400, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            self._send_error_json(500, str(exc))

    def _serve_static(self, path: str) -> None:
        root = self.state.static_dir
        if root is None:
            self._send_error_json(404, f"no such endpoint: {path}")
            return
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_error_json(404, f"not found: {path}")
            return
        body = target.read_bytes()
        ctype = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(state: ReviewState, host: str = "127.0.0.1",
                port: int = 8765) -> ThreadingHTTPServer:
    handler = type("BoundReviewHandler", (_ReviewHandler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(state: ReviewState, host: str = "127.0.0.1", port: int = 8765) -> None:
    server = make_server(state, host, port)
    addr = server.server_address
    # flush so tooling waiting on a pipe sees the address immediately
    print(f"review server listening on http://{addr[0]}:{addr[1]}/", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
