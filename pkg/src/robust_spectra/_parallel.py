"""Worker-count resolution and an order-preserving thread map."""

from concurrent.futures import ThreadPoolExecutor
import os

from .errors import ParameterError

ENV_THREADS = "ROBUST_SPECTRA_THREADS"


def resolve_threads(explicit=None):
    """Explicit value, else ``ROBUST_SPECTRA_THREADS``, else the CPU count."""
    if explicit is None:
        raw = os.environ.get(ENV_THREADS)
        if raw is None or raw.strip() == "":
            return max(1, os.cpu_count() or 1)
        try:
            explicit = int(raw)
        except ValueError as exc:
            raise ParameterError(f"{ENV_THREADS} must be an integer, got {raw!r}") from exc
    explicit = int(explicit)
    if explicit < 1:
        raise ParameterError("thread count must be >= 1")
    return explicit


def thread_map(fn, items, threads=None):
    """``[fn(x) for x in items]``, run on up to ``threads`` workers."""
    items = list(items)
    workers = min(resolve_threads(threads), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
