"""
Value change dump export of a finished trace.

Every net becomes a one-bit wire that is high for ``PULSEFLOW_PULSE_WIDTH_FS``
after each pulse; SFQ/DC converters are dumped as the levels they hold.
The output is a pure function of the trace, the design and the settings.
"""
import logging
from collections import defaultdict
from io import StringIO

from vcd import VCDWriter

from pulseflow import __version__
from pulseflow.cells import SFQDC
from pulseflow.utils import setting, split_pin

logger = logging.getLogger(__name__)

ROOT_SCOPE = 'pulseflow'


def _net_scope(net):
    cell, port = split_pin(net)
    if port is None:
        return '%s.ports' % ROOT_SCOPE, net
    return '%s.%s' % (ROOT_SCOPE, cell), port


def _pulse_levels(times, width):
    """Collapse pulse arrivals into ``(time, value)`` edges; overlapping pulses stay high."""
    deltas = defaultdict(int)
    for time in times:
        deltas[time] += 1
        deltas[time + width] -= 1
    active = level = 0
    for time in sorted(deltas):
        active += deltas[time]
        value = 1 if active else 0
        if value != level:
            level = value
            yield time, value


def export_vcd(trace, design=None, pulse_width_fs=None):
    """Render ``trace`` as VCD text with a 1 fs timescale."""
    width = setting('PULSEFLOW_PULSE_WIDTH_FS', 1000) if pulse_width_fs is None else pulse_width_fs
    if width <= 0:
        raise ValueError('pulse width must be positive, got %r' % width)

    pulses = defaultdict(list)
    for record in trace.records:
        pulses[record.net].append(record.time)
    converters = set(change.port for change in trace.levels)
    if design is not None:
        converters.update(cell.name for cell in design.cells if cell.kind == SFQDC)

    out = StringIO()
    changes = []
    with VCDWriter(out, timescale='1 fs', date=setting('PULSEFLOW_VCD_DATE', 'pulseflow'),
                   version='pulseflow %s' % __version__) as writer:
        order = 0
        for net in sorted(set(trace.nets) | set(pulses)):
            scope, name = _net_scope(net)
            var = writer.register_var(scope, name, 'wire', size=1, init=0)
            changes.extend((time, order, var, value) for time, value in _pulse_levels(pulses[net], width))
            order += 1
        outputs = {}
        for name in sorted(converters):
            outputs[name] = (order, writer.register_var('%s.outputs' % ROOT_SCOPE, name, 'wire',
                                                        size=1, init=0))
            order += 1
        for change in trace.levels:
            position, var = outputs[change.port]
            changes.append((change.time, position, var, change.level))

        changes.sort(key=lambda item: item[:2])
        for time, _, var, value in changes:
            writer.change(var, time, value)
    logger.debug('exported %d value changes', len(changes))
    return out.getvalue()
