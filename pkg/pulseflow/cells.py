"""
Behavioral models of the SFQ cells used by the shifter.

Every reaction has the shape ``react_<kind>(state, config, port, t)`` and
returns a :class:`Reaction`. Reactions mutate ``state`` in place and never
touch anything else, so a cell is owned by exactly one simulation.
"""
import logging
from collections import namedtuple

from pulseflow.utils import setting

logger = logging.getLogger(__name__)

JTL = 'JTL'
SPLIT = 'SPLIT'
MERGE = 'MERGE'
DRO = 'DRO'
D3 = 'D3'
RTFF = 'RTFF'
SFQDC = 'SFQDC'
SINK = 'SINK'

CELL_KINDS = (JTL, SPLIT, MERGE, DRO, D3, RTFF, SFQDC, SINK)

PortTable = namedtuple('PortTable', 'inputs outputs')

PORTS = {
    JTL: PortTable(('IN',), ('OUT',)),
    SPLIT: PortTable(('IN',), ('OUT1', 'OUT2')),
    MERGE: PortTable(('A', 'B'), ('OUT',)),
    DRO: PortTable(('SET', 'IN'), ('OUT',)),
    D3: PortTable(('SET', 'IN1', 'IN2', 'IN3'), ('O1', 'O2', 'O3')),
    RTFF: PortTable(('SET', 'T'), ('DIRECT', 'INVERTED')),
    SFQDC: PortTable(('IN',), ()),
    SINK: PortTable(('IN',), ()),
}

# Cells whose stored_bit is meaningful.
STORAGE_KINDS = (DRO, D3, RTFF)

TIMING_VIOLATION = 'TimingViolation'
DOUBLE_SET = 'DoubleSet'


class UnknownPort(KeyError):
    pass


class CellConfig(namedtuple('CellConfig', 'delay_fs faulty')):
    """Per-instance configuration: one delay for every output path."""

    __slots__ = ()

    def __new__(cls, delay_fs=None, faulty=False):
        if delay_fs is None:
            delay_fs = setting('PULSEFLOW_CELL_DELAY_FS', 3000)
        return super(CellConfig, cls).__new__(cls, int(delay_fs), bool(faulty))


class CellState(object):
    __slots__ = ('stored_bit', 'level', 'last_set', 'last_read', 'last_read_port')

    def __init__(self):
        self.stored_bit = 0
        self.level = 0
        # Arrival times of the latest SET and read/toggle pulses, used to
        # flag same-instant collisions.
        self.last_set = None
        self.last_read = None
        self.last_read_port = None

    def __repr__(self):
        return 'CellState(stored_bit=%d, level=%d)' % (self.stored_bit, self.level)


class Reaction(object):
    __slots__ = ('pulses', 'level', 'notes')

    def __init__(self, pulses=(), level=None, notes=()):
        # pulses: [(output port, emission time)]
        self.pulses = list(pulses)
        # level: (time, new level) for converters
        self.level = level
        # notes: [(code, message)]
        self.notes = list(notes)

    def __repr__(self):
        return 'Reaction(pulses=%r, level=%r, notes=%r)' % (self.pulses, self.level, self.notes)


def _check_port(kind, port):
    if port not in PORTS[kind].inputs:
        raise UnknownPort('%s has no input port %r' % (kind, port))


def react_jtl(state, config, port, t):
    _check_port(JTL, port)
    return Reaction([('OUT', t + config.delay_fs)])


def react_split(state, config, port, t):
    _check_port(SPLIT, port)
    out = t + config.delay_fs
    return Reaction([('OUT1', out), ('OUT2', out)])


def react_merge(state, config, port, t):
    _check_port(MERGE, port)
    return Reaction([('OUT', t + config.delay_fs)])


def react_sink(state, config, port, t):
    _check_port(SINK, port)
    return Reaction()


def _collision(state, port, t):
    """Return a timing note if SET and a read pulse share an arrival instant."""
    if port == 'SET':
        clash = state.last_read == t
        state.last_set = t
    else:
        clash = state.last_set == t
        state.last_read = t
        state.last_read_port = port
    if clash:
        return (TIMING_VIOLATION, 'SET and %s arrived together at %d fs' % (state.last_read_port, t))
    return None


def _store(state, t, notes):
    if state.stored_bit:
        notes.append((DOUBLE_SET, 'SET at %d fs while already storing a quantum' % t))
    state.stored_bit = 1


def _readout(state, config, port, t, out_port):
    notes = []
    clash = _collision(state, port, t)
    if clash:
        notes.append(clash)
    if port == 'SET':
        _store(state, t, notes)
        return Reaction(notes=notes)
    if state.stored_bit:
        state.stored_bit = 0
        return Reaction([(out_port, t + config.delay_fs)], notes=notes)
    return Reaction(notes=notes)


def react_dro(state, config, port, t):
    _check_port(DRO, port)
    return _readout(state, config, port, t, 'OUT')


D3_OUTPUTS = {'IN1': 'O1', 'IN2': 'O2', 'IN3': 'O3'}


def react_d3(state, config, port, t):
    _check_port(D3, port)
    return _readout(state, config, port, t, D3_OUTPUTS.get(port))


def react_rtff(state, config, port, t):
    """
    Resettable T flip-flop.

    A T pulse on a cleared cell sets it and leaves on DIRECT; on a set cell
    it clears it and leaves on INVERTED (the carry).
    """
    _check_port(RTFF, port)
    notes = []
    clash = _collision(state, port, t)
    if clash:
        notes.append(clash)
    if port == 'SET':
        _store(state, t, notes)
        return Reaction(notes=notes)
    out = t + config.delay_fs
    if state.stored_bit:
        state.stored_bit = 0
        return Reaction([('INVERTED', out)], notes=notes)
    state.stored_bit = 1
    return Reaction([('DIRECT', out)], notes=notes)


def react_sfqdc(state, config, port, t):
    _check_port(SFQDC, port)
    state.level = 1 - state.level
    return Reaction(level=(t + config.delay_fs, state.level))


REACTIONS = {
    JTL: react_jtl,
    SPLIT: react_split,
    MERGE: react_merge,
    DRO: react_dro,
    D3: react_d3,
    RTFF: react_rtff,
    SFQDC: react_sfqdc,
    SINK: react_sink,
}


def react(kind, state, config, port, t):
    """Dispatch one input pulse to the model of ``kind``; faulty cells absorb it."""
    if kind not in REACTIONS:
        raise UnknownPort('unknown cell kind %r' % kind)
    if config.faulty:
        _check_port(kind, port)
        return Reaction()
    return REACTIONS[kind](state, config, port, t)


def ring_feedback_count(bits, operand):
    """
    Run the resettable-TFF ring as a plain state machine.

    The ring is ``bits`` RTFF cells preloaded with ``operand``; every DIRECT
    output is fed back to the first cell, every INVERTED output carries to
    the next cell and the last INVERTED output is the readout. Returns
    ``(feedback_pulses, final_bits)``.
    """
    if not 0 <= operand < 2 ** bits:
        raise ValueError('operand %d does not fit in %d bits' % (operand, bits))
    config = CellConfig(delay_fs=1)
    states = [CellState() for _ in range(bits)]
    for i, state in enumerate(states):
        if (operand >> i) & 1:
            react_rtff(state, config, 'SET', 0)

    feedback = 0
    t = 1
    index = 0
    while True:
        reaction = react_rtff(states[index], config, 'T', t)
        t += 1
        port = reaction.pulses[0][0]
        if port == 'DIRECT':
            feedback += 1
            index = 0
        elif index == bits - 1:
            break
        else:
            index += 1
    logger.debug('ring of %d preloaded with %d fed back %d pulses', bits, operand, feedback)
    return feedback, tuple(state.stored_bit for state in states)
