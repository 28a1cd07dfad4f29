import random

import pytest

from syncroom import handlers, replay
from syncroom.harness import make_fuzz_scenario, run_scenario, serialize_states
from syncroom.replay import ReplayError, ReplaySchedule, SinkError, replay_to, run_timed, seek
from syncroom.server import load_log


class VirtualTimer:
    """Fake monotonic clock: sleeping advances it instantly."""

    def __init__(self):
        self.t = 0.0

    def now(self):
        return self.t

    def sleep(self, seconds):
        assert seconds >= 0
        self.t += seconds


@pytest.fixture(scope="module")
def session_log(tmp_path_factory):
    out = tmp_path_factory.mktemp("logs")
    result = run_scenario(make_fuzz_scenario(11, 120, 3), out_dir=out)
    assert result.ok, result.divergence
    return load_log(result.log_path), result.final_states


def test_full_replay_matches_live(session_log):
    entries, live = session_log
    schedule = ReplaySchedule(entries)
    states = {}
    replay_to(schedule, states, handlers.build_tree(), schedule.span_ms)
    assert serialize_states(states) == live


def test_replay_to_zero_before_first_event(session_log):
    entries, _ = session_log
    first_media = min(e.received_at for e in entries
                      if getattr(e.message, "event_type", None))
    schedule = ReplaySchedule(entries)
    states = {}
    if first_media > 0:
        _, emitted = replay_to(schedule, states, handlers.build_tree(), first_media - 1)
        assert all(getattr(e.message, "event_type", None) is None for e in emitted)


def test_replay_to_idempotent_at_fixed_time(session_log):
    entries, _ = session_log
    schedule = ReplaySchedule(entries)
    states = {}
    tree = handlers.build_tree()
    mid = schedule.span_ms // 2
    replay_to(schedule, states, tree, mid)
    _, emitted = replay_to(schedule, states, tree, mid)
    assert emitted == []
    with pytest.raises(ReplayError):
        replay_to(schedule, states, tree, mid - 1)


def test_seek_equals_fresh_replay(session_log):
    entries, _ = session_log
    tree = handlers.build_tree()
    rng = random.Random(5)
    span = max(e.received_at for e in entries)
    schedule = ReplaySchedule(entries)
    states = {}
    for _ in range(6):
        target = rng.randint(0, span)
        seek(schedule, states, tree, target)
        fresh_schedule = ReplaySchedule(entries)
        fresh = {}
        replay_to(fresh_schedule, fresh, tree, target)
        assert serialize_states(states) == serialize_states(fresh)


def test_seek_back_and_forth_deterministic(session_log):
    entries, live = session_log
    tree = handlers.build_tree()
    span = max(e.received_at for e in entries)
    schedule = ReplaySchedule(entries)
    states = {}
    seek(schedule, states, tree, span)
    seek(schedule, states, tree, span // 2)
    seek(schedule, states, tree, span)
    assert serialize_states(states) == live


def test_run_timed_final_states_pace_independent(session_log):
    entries, live = session_log
    for pace in (1.0, 4.0, 0.5):
        timer = VirtualTimer()
        schedule = ReplaySchedule(entries, pace=pace)
        states = {}
        run_timed(schedule, states, handlers.build_tree(), pace, sink=lambda e: None,
                  now=timer.now, sleep=timer.sleep)
        assert serialize_states(states) == live


def test_run_timed_pacing_virtual(session_log):
    entries, _ = session_log
    span_s = max(e.received_at for e in entries) / 1000.0
    for pace in (1.0, 2.0):
        timer = VirtualTimer()
        schedule = ReplaySchedule(entries, pace=pace)
        run_timed(schedule, {}, handlers.build_tree(), pace, sink=lambda e: None,
                  now=timer.now, sleep=timer.sleep)
        assert timer.t == pytest.approx(span_s / pace, abs=0.001)


def test_run_timed_monotone_emission(session_log):
    entries, _ = session_log
    emitted = []
    timer = VirtualTimer()
    schedule = ReplaySchedule(entries)
    run_timed(schedule, {}, handlers.build_tree(), 8.0, sink=emitted.append,
              now=timer.now, sleep=timer.sleep)
    seqs = [e.global_seq for e in emitted]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


def test_run_timed_real_clock_small_log(session_log):
    entries, _ = session_log
    short = entries[:10]
    base = short[0].received_at
    # re-time the short log into a ~0.3 s window
    from dataclasses import replace
    short = [replace(e, received_at=min(300, e.received_at - base)) for e in short]
    import time
    t0 = time.monotonic()
    run_timed(ReplaySchedule(short), {}, handlers.build_tree(), 1.0, sink=lambda e: None)
    elapsed = time.monotonic() - t0
    assert elapsed <= 0.3 + 0.05 * len(short)


def test_sink_failure_preserves_position(session_log):
    entries, _ = session_log
    timer = VirtualTimer()
    schedule = ReplaySchedule(entries)
    calls = []

    def sink(entry):
        calls.append(entry)
        if len(calls) == 5:
            raise RuntimeError("boom")

    with pytest.raises(SinkError):
        run_timed(schedule, {}, handlers.build_tree(), 1.0, sink=sink,
                  now=timer.now, sleep=timer.sleep)
    assert schedule.position == 4  # entry 5 was not consumed


def test_empty_log_completes_immediately():
    timer = VirtualTimer()
    states = run_timed(ReplaySchedule([]), {}, handlers.build_tree(), 1.0,
                       sink=lambda e: None, now=timer.now, sleep=timer.sleep)
    assert states == {} and timer.t == 0.0
    with pytest.raises(ReplayError):
        run_timed(ReplaySchedule([]), {}, handlers.build_tree(), 0.0, sink=lambda e: None)
