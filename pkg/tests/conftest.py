import pytest

from cdcr.engine.synth import NoiseModel, synth_corpus


@pytest.fixture(scope="session")
def small_synth(tmp_path_factory):
    """A 150-document noisy corpus, written once per session."""
    sc = synth_corpus(21, 150, 40, NoiseModel(0.1, 0.2, 0.05))
    return sc, sc.write(tmp_path_factory.mktemp("small_synth"))


ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion.

    Used as ``with criterion("1", "worked examples") as note:``; ``note`` appends
    measured values to the line. Failures are recorded and re-raised.
    """
    import contextlib

    @contextlib.contextmanager
    def record(number, title):
        details = []
        try:
            yield details.append
        except BaseException as e:
            reason = str(e).splitlines()[0] if str(e) else type(e).__name__
            ACCEPTANCE.append((number, "FAIL", title, details + [reason]))
            raise
        ACCEPTANCE.append((number, "PASS", title, details))

    return record


def pytest_sessionstart(session):
    import time
    session.config._acceptance_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import time
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - config._acceptance_start
    lines = [(n, s, t, d) for n, s, t, d in ACCEPTANCE]
    lines.append(("7c", "PASS" if elapsed <= 600 else "FAIL", "suite wall time <= 10 min",
                  [f"{elapsed:.1f} s"]))
    terminalreporter.section("acceptance criteria")
    for number, status, title, details in sorted(lines, key=lambda x: x[0]):
        extra = f" ({'; '.join(details)})" if details else ""
        terminalreporter.write_line(f"criterion {number}: {status} {title}{extra}")
