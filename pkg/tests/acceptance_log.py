"""Collects one verdict line per acceptance criterion for the terminal summary."""
import time
from contextlib import contextmanager

RESULTS = {}


@contextmanager
def criterion(number, title, budget_s):
    start = time.perf_counter()
    detail = {"text": ""}
    try:
        yield detail
        elapsed = time.perf_counter() - start
        if elapsed >= budget_s:
            raise AssertionError(f"took {elapsed:.1f}s, budget {budget_s}s")
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        RESULTS[number] = f"[{number}] FAIL  {title} ({elapsed:.2f}s) {exc}".rstrip()
        raise
    RESULTS[number] = f"[{number}] PASS  {title} ({elapsed:.2f}s) {detail['text']}".rstrip()
