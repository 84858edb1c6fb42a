"""Throughput and memory benchmarks at batch 1 without gradients.

Both measurements assume exclusive use of the machine: run them one at a
time with no other heavy process competing for cores or memory.
"""
from __future__ import annotations

import multiprocessing as mp
import os
import time
from dataclasses import dataclass

import torch

from ..errors import ConfigError
from ..model.config import ModelConfig

UNAVAILABLE = "unavailable"
MALLOC_ENV = {"MALLOC_MMAP_THRESHOLD_": "131072", "MALLOC_TRIM_THRESHOLD_": "131072", "MALLOC_ARENA_MAX": "1"}


def _sync(device):
    if torch.device(device).type == "cuda":
        torch.cuda.synchronize(device)


@torch.no_grad()
def measure_fps(model, input_size, iters: int = 20, warmup: int = 3, device="cpu") -> float:
    """Frames per second over ``iters`` timed forwards after ``warmup`` untimed ones."""
    if iters < 10 or warmup < 3:
        raise ConfigError(f"need iters >= 10 and warmup >= 3, got {iters} and {warmup}")
    h, w = input_size
    model = model.to(device).eval()
    x = torch.rand(1, 3, h, w, generator=torch.Generator().manual_seed(0)).mul_(255).to(device)
    for _ in range(warmup):
        model(x)
    _sync(device)
    t0 = time.perf_counter()
    for _ in range(iters):
        model(x)
    _sync(device)
    return iters / (time.perf_counter() - t0)


@dataclass
class MemoryResult:
    mb: float | str
    mode: str

    def __str__(self):
        return self.mb if isinstance(self.mb, str) else f"{self.mb:.1f}"


def _proc_status_mb(field: str) -> float:
    with open("/proc/self/status") as fh:
        for line in fh:
            if line.startswith(field + ":"):
                return int(line.split()[1]) / 1024.0
    raise OSError(f"{field} missing from /proc/self/status")


def _reset_peak() -> bool:
    """Reset the kernel's resident high-water mark; False where unsupported."""
    try:
        with open("/proc/self/clear_refs", "w") as fh:
            fh.write("5")
        _proc_status_mb("VmHWM")
        return True
    except OSError:
        return False


def _cpu_child(cfg_dict, input_size, queue):
    # runs in a fresh interpreter, so the high-water mark reflects this measurement only
    import gc
    import resource

    from ..model.network import HRFNet

    # one intra-op thread keeps per-thread scratch buffers out of the number
    torch.set_num_threads(1)
    gc.collect()
    if _reset_peak():
        base, mode = _proc_status_mb("VmRSS"), "cpu_peak_rss"

        def peak():
            return _proc_status_mb("VmHWM")
    else:
        # lifetime high-water mark: start-up transients may mask small models
        def peak():
            return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0

        base, mode = peak(), "cpu_maxrss"
    if cfg_dict is not None:
        model = HRFNet(ModelConfig.from_dict(cfg_dict)).eval()
        x = torch.zeros(1, 3, *input_size)
        with torch.no_grad():
            model(x)  # warm-up
            model(x)
    queue.put((peak() - base, mode))


def _memory_cpu(cfg_dict, input_size) -> MemoryResult:
    try:
        import resource  # noqa: F401
    except ImportError:
        return MemoryResult(UNAVAILABLE, UNAVAILABLE)
    ctx = mp.get_context("spawn")
    queue = ctx.Queue()
    proc = ctx.Process(target=_cpu_child, args=(cfg_dict, tuple(input_size), queue))
    # glibc otherwise raises its mmap threshold as blocks are freed, which makes
    # the resident peak depend on allocation history
    saved = {k: os.environ.get(k) for k in MALLOC_ENV}
    os.environ.update(MALLOC_ENV)
    try:
        proc.start()
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v
    try:
        mb, mode = queue.get(timeout=600)
    except Exception:
        mb = None
    proc.join()
    if mb is None or proc.exitcode != 0:
        return MemoryResult(UNAVAILABLE, UNAVAILABLE)
    return MemoryResult(float(mb), mode)


def _memory_cuda(model, input_size, device) -> MemoryResult:
    torch.cuda.empty_cache()
    torch.cuda.synchronize(device)
    base = torch.cuda.memory_allocated(device)
    if model is not None:
        model = model.to(device).eval()
        x = torch.zeros(1, 3, *input_size, device=device)
        with torch.no_grad():
            model(x)
            torch.cuda.synchronize(device)
            torch.cuda.reset_peak_memory_stats(device)
            model(x)
            torch.cuda.synchronize(device)
        peak = torch.cuda.max_memory_allocated(device)
    else:
        peak = base
    return MemoryResult((peak - base) / 2**20, "cuda_peak_allocated")


def measure_memory(model, input_size, device="cpu") -> MemoryResult:
    """Peak memory of a batch-1 gradient-free forward, minus the pre-model baseline.

    ``model`` may be an HRFNet, a ModelConfig (random weights) or None, which
    measures the empty baseline. On CPU the forward runs in a spawned process
    and the reported value is its peak resident set growth after interpreter
    and library start-up; on CUDA it is the allocator's peak. The CPU child
    rebuilds the model from its config: weight values do not change the
    footprint, and shipping them over would inflate the baseline instead.
    """
    if model is None:
        cfg_dict = None
    elif isinstance(model, ModelConfig):
        cfg_dict = model.to_dict()
    else:
        cfg_dict = model.cfg.to_dict()
    if torch.device(device).type == "cuda":
        if not torch.cuda.is_available():
            return MemoryResult(UNAVAILABLE, UNAVAILABLE)
        net = None if model is None else (model if not isinstance(model, ModelConfig) else _build(model))
        return _memory_cuda(net, input_size, device)
    return _memory_cpu(cfg_dict, input_size)


def _build(cfg):
    from ..model.network import HRFNet

    return HRFNet(cfg)


def bench_row(method: str, memory: MemoryResult, fps: float) -> str:
    """One line shaped like a method / memory (MB) / FPS table."""
    return f"| {method} | {memory} | {fps:.2f} |"


BENCH_HEADER = "| Method | Memory (MB) | FPS |\n|---|---|---|"
