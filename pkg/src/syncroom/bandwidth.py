"""Per-session byte accounting at the message-framing boundary.

Counts are taken post-serialization and pre-transport, so they are
wire-exact excluding transport/TLS overhead.  Event payload bytes are
bucketed per event type on the uplink (presenter side); envelope overhead
and bootstrap traffic (join handshakes, snapshots, page loads) are reported
in separate buckets so per-event figures stay comparable.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from .server import SessionLogEntry, encode_entry
from .protocol import wire_size

UP = "up"
DOWN = "down"

EVENT_BUCKET = "event"
OVERHEAD_BUCKET = "overhead"
BOOTSTRAP_BUCKET = "bootstrap"


@dataclass
class TypeStats:
    count: int = 0
    bytes: int = 0


@dataclass
class BandwidthReport:
    session_id: str
    per_event_type: dict[str, TypeStats] = field(default_factory=dict)
    overhead: dict[str, int] = field(default_factory=lambda: {UP: 0, DOWN: 0})
    bootstrap: dict[str, int] = field(default_factory=lambda: {UP: 0, DOWN: 0})
    down_bytes: int = 0  # whole frames delivered to the reference client
    # second -> [up, down]; includes all buckets
    timeseries: dict[int, list[int]] = field(default_factory=dict)

    @property
    def event_bytes(self) -> int:
        return sum(s.bytes for s in self.per_event_type.values())

    @property
    def total_bytes_up(self) -> int:
        return self.event_bytes + self.overhead[UP] + self.bootstrap[UP]

    @property
    def total_bytes_down(self) -> int:
        return self.down_bytes + self.overhead[DOWN] + self.bootstrap[DOWN]

    @property
    def duration_s(self) -> int:
        return max(self.timeseries) + 1 if self.timeseries else 0

    def _bucket(self, at_ms: int) -> list[int]:
        return self.timeseries.setdefault(max(0, at_ms) // 1000, [0, 0])

    def record(self, direction: str, nbytes: int, event_type: str, at_ms: int) -> None:
        """Account one framed message payload for an event type."""
        if nbytes <= 0:
            raise ValueError("nbytes must be positive")
        if direction == UP:
            stats = self.per_event_type.setdefault(event_type, TypeStats())
            stats.count += 1
            stats.bytes += nbytes
            self._bucket(at_ms)[0] += nbytes
        elif direction == DOWN:
            self.down_bytes += nbytes
            self._bucket(at_ms)[1] += nbytes
        else:
            raise ValueError(f"unknown direction {direction!r}")

    def record_overhead(self, direction: str, nbytes: int, at_ms: int) -> None:
        if nbytes < 0:
            raise ValueError("nbytes must be non-negative")
        self.overhead[direction] += nbytes
        self._bucket(at_ms)[0 if direction == UP else 1] += nbytes

    def record_bootstrap(self, direction: str, nbytes: int, at_ms: int,
                         label: str = "") -> None:
        if nbytes < 0:
            raise ValueError("nbytes must be non-negative")
        self.bootstrap[direction] += nbytes
        self._bucket(at_ms)[0 if direction == UP else 1] += nbytes


def report_from_log(session_id: str, entries: list[SessionLogEntry]) -> BandwidthReport:
    """Rebuild the uplink accounting for a persisted log.

    Server-synthesized entries (join/leave) count as bootstrap; everything a
    client submitted counts as event payload plus envelope overhead.
    """
    report = BandwidthReport(session_id)
    for entry in entries:
        payload = wire_size(entry.message)
        envelope = len(encode_entry(entry)) - payload
        if entry.sender_id == "server":
            report.record_bootstrap(UP, payload + envelope, entry.received_at)
            continue
        msg = entry.message
        event_type = getattr(msg, "event_type", None) or getattr(msg, "control_type")
        report.record(UP, payload, event_type, entry.received_at)
        report.record_overhead(UP, envelope, entry.received_at)
    return report


def emit_report(report: BandwidthReport, fmt: str = "table") -> str:
    """Deterministic textual report; csv columns are second,bytes_up,bytes_down."""
    if fmt == "csv":
        out = io.StringIO()
        out.write("second,bytes_up,bytes_down\n")
        for second in range(report.duration_s):
            up, down = report.timeseries.get(second, (0, 0))
            out.write(f"{second},{up},{down}\n")
        return out.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    out = io.StringIO()
    out.write(f"session {report.session_id}: {report.duration_s} s\n")
    out.write(f"{'event type':<16}{'count':>8}{'bytes':>10}\n")
    for event_type in sorted(report.per_event_type):
        stats = report.per_event_type[event_type]
        out.write(f"{event_type:<16}{stats.count:>8}{stats.bytes:>10}\n")
    out.write(f"{'event total':<16}{'':>8}{report.event_bytes:>10}\n")
    out.write(f"{'overhead up':<16}{'':>8}{report.overhead[UP]:>10}\n")
    out.write(f"{'bootstrap up':<16}{'':>8}{report.bootstrap[UP]:>10}\n")
    out.write(f"{'total up':<16}{'':>8}{report.total_bytes_up:>10}\n")
    out.write(f"{'total down':<16}{'':>8}{report.total_bytes_down:>10}\n")
    return out.getvalue()


def render_figure(report: BandwidthReport, path) -> None:
    """Render the per-second byte timeseries to an image file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    seconds = list(range(report.duration_s))
    up = [report.timeseries.get(s, (0, 0))[0] for s in seconds]
    down = [report.timeseries.get(s, (0, 0))[1] for s in seconds]
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.bar(seconds, up, width=0.9, label="up", color="#1f77b4")
    if any(down):
        ax.step(seconds, down, where="mid", label="down", color="#d62728")
    ax.set_xlabel("session time (s)")
    ax.set_ylabel("bytes/s")
    ax.set_title(f"bandwidth, session {report.session_id}")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
