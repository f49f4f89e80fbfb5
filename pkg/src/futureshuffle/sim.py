"""Virtual clock and event heap driving the simulated cluster."""

import heapq
import itertools


class Event:
    __slots__ = ("time", "fn", "args", "cancelled")

    def __init__(self, time, fn, args):
        self.time = time
        self.fn = fn
        self.args = args
        self.cancelled = False

    def cancel(self):
        self.cancelled = True


class EventLoop:
    """Single-threaded discrete-event loop. Ties run in scheduling order."""

    def __init__(self):
        self.now = 0.0
        self._heap = []
        self._seq = itertools.count()

    def at(self, time, fn, *args):
        ev = Event(max(time, self.now), fn, args)
        heapq.heappush(self._heap, (ev.time, next(self._seq), ev))
        return ev

    def after(self, delay, fn, *args):
        return self.at(self.now + delay, fn, *args)

    def next_time(self):
        while self._heap and self._heap[0][2].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0][0] if self._heap else None

    def step(self):
        """Run the earliest pending event. Returns False when the heap is empty."""
        t = self.next_time()
        if t is None:
            return False
        _, _, ev = heapq.heappop(self._heap)
        self.now = ev.time
        ev.fn(*ev.args)
        return True

    def advance_to(self, time):
        if time > self.now:
            self.now = time


class Lane:
    """A serial resource such as one node's disk or NIC."""

    __slots__ = ("busy_until",)

    def __init__(self):
        self.busy_until = 0.0

    def reserve(self, now, duration, not_before=None):
        start = max(now, self.busy_until)
        if not_before is not None:
            start = max(start, not_before)
        self.busy_until = start + duration
        return self.busy_until
