"""
Deterministic discrete-event engine for SFQ pulses.

Time is an integer number of femtoseconds. Events are delivered in
``(time, seq)`` order, where ``seq`` is the insertion number, so a run is a
pure function of the design, the stimulus and the configuration.
"""
import heapq
import logging
from collections import namedtuple

from pulseflow.cells import CellState, react
from pulseflow.netlist import NetlistError, check_design, errors
from pulseflow.utils import join_pin, setting, split_pin

logger = logging.getLogger(__name__)

PulseEvent = namedtuple('PulseEvent', 'time seq net')
Pulse = namedtuple('Pulse', 'time net')
LevelChange = namedtuple('LevelChange', 'time port level')
Note = namedtuple('Note', 'time code cell message')


class SimulationError(Exception):
    pass


class SchedulingInPast(SimulationError):
    pass


class NonTermination(SimulationError):
    pass


class UnknownNet(SimulationError, KeyError):
    pass


class EventQueue(object):
    """Min-heap of pulse arrivals ordered by ``(time, seq)``."""

    def __init__(self):
        self._heap = []
        self._next_seq = 0
        self.now = 0

    def __len__(self):
        return len(self._heap)

    def schedule(self, time, net):
        if time < self.now:
            raise SchedulingInPast('cannot schedule %r at %d fs, current time is %d fs'
                                   % (net, time, self.now))
        seq = self._next_seq
        self._next_seq += 1
        heapq.heappush(self._heap, PulseEvent(time, seq, net))
        return seq

    def pop(self):
        event = heapq.heappop(self._heap)
        self.now = event.time
        return event


def schedule(queue, time, net):
    return queue.schedule(time, net)


class Trace(object):
    """Ordered pulse record per net plus converter level changes."""

    def __init__(self, nets=()):
        self.nets = tuple(nets)
        self.records = []
        self.levels = []
        self.diagnostics = []
        self.delivered = 0
        self.final_states = {}

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (self.records, self.levels, self.diagnostics) == \
            (other.records, other.levels, other.diagnostics)

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __repr__(self):
        return '<Trace: %d pulses, %d level changes>' % (len(self.records), len(self.levels))

    def pulses_on(self, net):
        if net not in self.nets:
            raise UnknownNet(net)
        return [record.time for record in self.records if record.net == net]

    def final_levels(self):
        levels = {}
        for change in self.levels:
            levels[change.port] = change.level
        return levels


def count_pulses(trace, net, window=(0, None)):
    """Count pulses on ``net`` with ``start <= time < end``; ``end=None`` is open."""
    start, end = window
    if end is not None and start > end:
        raise ValueError('window start %d is after end %d' % (start, end))
    return sum(1 for t in trace.pulses_on(net) if t >= start and (end is None or t < end))


class Simulation(object):
    """
    A design compiled for repeated simulation.

    Every :meth:`run` starts from fresh cell state (all stored bits and
    converter levels 0 at t=0), so one instance can serve a whole sweep.
    """

    def __init__(self, design, max_events=None):
        diagnostics = check_design(design)
        if errors(diagnostics):
            raise NetlistError(diagnostics)
        self.design = design
        self.max_events = setting('PULSEFLOW_MAX_EVENTS', 10 ** 7) \
            if max_events is None else max_events

        # net name -> (sink cell or None, sink port, wire delay)
        self._nets = {}
        # driver pin -> net name
        self._driven = {}
        for net in design.nets:
            name = design.net_name(net)
            cell, port = split_pin(net.sink)
            if port is None or not design.has_cell(cell):
                cell, port = None, None
            self._nets[name] = (cell, port, net.wire_delay_fs)
            self._driven[net.driver] = name
        self._cells = dict((cell.name, cell) for cell in design.cells)
        self.net_names = tuple(sorted(self._nets))

    def run(self, stimulus):
        """
        Deliver ``stimulus`` (``[(time_fs, external input)]``, ascending) and
        every pulse it causes until the queue drains.
        """
        queue = EventQueue()
        trace = Trace(self.net_names)
        states = dict((name, CellState()) for name in self._cells)

        last = None
        for time, port in stimulus:
            if last is not None and time < last:
                raise SimulationError('stimulus is not sorted: %d fs after %d fs' % (time, last))
            if port not in self.design.inputs:
                raise UnknownNet('no external input named %r' % port)
            last = time
            if port not in self._nets:
                logger.debug('input %r drives nothing, pulse at %d fs dropped', port, time)
                continue
            queue.schedule(time + self._nets[port][2], port)

        delivered = 0
        while queue:
            event = queue.pop()
            delivered += 1
            if delivered > self.max_events:
                raise NonTermination('aborted after %d events at %d fs (last net %r)'
                                     % (self.max_events, event.time, event.net))
            trace.records.append(Pulse(event.time, event.net))
            cell_name, port, _ = self._nets[event.net]
            if cell_name is None:
                continue
            cell = self._cells[cell_name]
            reaction = react(cell.kind, states[cell_name], cell.config, port, event.time)
            for code, message in reaction.notes:
                logger.warning('%s on %s: %s', code, cell_name, message)
                trace.diagnostics.append(Note(event.time, code, cell_name, message))
            if reaction.level is not None:
                at, level = reaction.level
                trace.levels.append(LevelChange(at, cell_name, level))
            for out_port, at in reaction.pulses:
                name = self._driven.get(join_pin(cell_name, out_port))
                if name is None:
                    continue
                queue.schedule(at + self._nets[name][2], name)

        trace.levels.sort(key=lambda change: change.time)
        trace.delivered = delivered
        trace.final_states = states
        logger.debug('%d events delivered, %d level changes, %d diagnostics',
                     delivered, len(trace.levels), len(trace.diagnostics))
        return trace


def run(design, stimulus, max_events=None):
    return Simulation(design, max_events=max_events).run(stimulus)


def parse_stimulus(text):
    """Parse ``<time_fs> <ExtInputName>`` lines into a sorted stimulus list."""
    stimulus = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].isdigit():
            raise ValueError('line %d: expected "<time_fs> <input>", got %r' % (lineno, raw))
        stimulus.append((int(parts[0]), parts[1]))
    stimulus.sort(key=lambda item: item[0])
    return stimulus
