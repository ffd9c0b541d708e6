"""Block-wise sliding-window execution with left/chunk/right context.

Window ``w`` spans ``[w*C - L_left, w*C + C + L_right)`` (zero-padded past
the recording edges) and only the outputs whose start falls in the chunk
``[w*C, (w+1)*C)`` are emitted, so emissions tile the timeline once and a
sample is reported at most ``C + L_right`` after it was captured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["BlockConfig", "BlockStreamer", "stream_blocks"]


@dataclass(frozen=True)
class BlockConfig:
    l_left: float = 1.6
    l_chunk: float = 0.64
    l_right: float = 0.16

    def __post_init__(self):
        if self.l_chunk <= 0:
            raise ValueError("l_chunk must be positive")
        if self.l_left < 0 or self.l_right < 0:
            raise ValueError("context lengths must be non-negative")

    @property
    def total(self) -> float:
        return self.l_left + self.l_chunk + self.l_right

    @property
    def latency(self) -> float:
        return self.l_chunk + self.l_right

    def samples(self, sample_rate: int) -> tuple[int, int, int]:
        return tuple(int(round(v * sample_rate)) for v in (self.l_left, self.l_chunk, self.l_right))


class BlockStreamer:
    """Incremental block executor for one stream.

    ``processor(window)`` receives a (channels, L) window and returns a
    sequence (list or array) whose item ``j`` describes the unit starting at
    window sample ``j * unit_hop``. ``push`` returns ``(unit_index, item)``
    pairs as soon as their block's right context has arrived.
    """

    def __init__(self, block: BlockConfig, sample_rate: int, processor: Callable, unit_hop: int = 1):
        self.block = block
        self.sample_rate = sample_rate
        self.processor = processor
        self.unit_hop = unit_hop
        self.left, self.chunk, self.right = block.samples(sample_rate)
        if self.left % unit_hop or self.chunk % unit_hop:
            raise ValueError("left and chunk contexts must be whole multiples of the unit hop")
        self._buf: np.ndarray | None = None
        self._buf_start = 0  # absolute index of _buf[:, 0]
        self.received = 0
        self.next_window = 0
        self.finished = False

    def _window(self, w: int) -> np.ndarray:
        start = w * self.chunk - self.left
        stop = w * self.chunk + self.chunk + self.right
        out = np.zeros((self._buf.shape[0], stop - start), dtype=self._buf.dtype)
        lo = max(start, self._buf_start)
        hi = min(stop, self.received)
        if hi > lo:
            out[:, lo - start : hi - start] = self._buf[:, lo - self._buf_start : hi - self._buf_start]
        return out

    def _run(self, w: int, limit: int) -> list:
        items = self.processor(self._window(w))
        start = w * self.chunk - self.left
        first = w * self.chunk // self.unit_hop
        stop_sample = min((w + 1) * self.chunk, limit)
        n_units = math.ceil((stop_sample - w * self.chunk) / self.unit_hop)
        j0 = (w * self.chunk - start) // self.unit_hop
        if len(items) < j0 + n_units:
            raise ValueError("processor returned too few units for its window")
        return [(first + k, items[j0 + k]) for k in range(n_units)]

    def _trim(self):
        keep_from = self.next_window * self.chunk - self.left
        if keep_from > self._buf_start:
            self._buf = self._buf[:, keep_from - self._buf_start :]
            self._buf_start = keep_from

    def push(self, samples) -> list:
        if self.finished:
            raise RuntimeError("stream already flushed")
        x = np.atleast_2d(np.asarray(samples))
        if self._buf is None:
            self._buf = x.copy()
        else:
            self._buf = np.concatenate([self._buf, x], axis=1)
        self.received += x.shape[1]
        out = []
        while (self.next_window + 1) * self.chunk + self.right <= self.received:
            out.extend(self._run(self.next_window, limit=math.inf))
            self.next_window += 1
            self._trim()
        return out

    def flush(self) -> list:
        """Process the remaining windows, zero-padding past the end."""
        self.finished = True
        out = []
        if self._buf is None:
            return out
        while self.next_window * self.chunk < self.received:
            out.extend(self._run(self.next_window, limit=self.received))
            self.next_window += 1
            self._trim()
        return out


def stream_blocks(audio, block: BlockConfig, processor: Callable, sample_rate: int = 16000, unit_hop: int = 1):
    """Run ``processor`` block-wise over a whole recording.

    Returns the concatenated chunk-region outputs: an array if the processor
    returns arrays, otherwise a list.
    """
    x = np.atleast_2d(np.asarray(audio))
    streamer = BlockStreamer(block, sample_rate, processor, unit_hop)
    pairs = streamer.push(x) + streamer.flush()
    items = [item for _, item in pairs]
    if items and isinstance(items[0], np.ndarray) or (items and np.isscalar(items[0])):
        return np.asarray(items)
    return items
