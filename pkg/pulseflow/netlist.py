"""
Flat SFQ netlists: the data model, a text parser/printer and the
structural design-rule check.

Text format, one statement per line::

    # comment
    cell <KIND> <name> [delay_fs=<int>] [faulty=<0|1>]
    net <name.PORT> -> <name.PORT> [wire_delay_fs=<int>]
    input <ExtName> -> <name.PORT>
    output <name.PORT> -> <ExtName>
"""
import logging
import re
from collections import Counter, defaultdict, namedtuple

from pulseflow.cells import CELL_KINDS, PORTS, CellConfig
from pulseflow.utils import is_valid_name, join_pin, split_pin

logger = logging.getLogger(__name__)

ERROR = 'error'
WARNING = 'warning'

HEADER = '# pulseflow netlist'


class Diagnostic(namedtuple('Diagnostic', 'severity code message location line column')):
    __slots__ = ()

    def __new__(cls, severity, code, message, location=None, line=None, column=None):
        return super(Diagnostic, cls).__new__(cls, severity, code, message, location, line, column)

    @property
    def is_error(self):
        return self.severity == ERROR

    def __str__(self):
        where = self.location or ''
        if self.line is not None:
            where = 'line %d, column %d' % (self.line, self.column or 1)
        return '%s %s [%s]: %s' % (self.severity, self.code, where, self.message)


class NetlistError(Exception):
    """Raised when a netlist cannot be parsed or must not be simulated."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super(NetlistError, self).__init__(
            '\n'.join(str(d) for d in self.diagnostics if d.is_error)
        )


class CellInstance(namedtuple('CellInstance', 'name kind config')):
    __slots__ = ()

    @property
    def ports(self):
        return PORTS[self.kind]


class Net(namedtuple('Net', 'driver sink wire_delay_fs')):
    """A point-to-point connection; endpoints are ``cell.PORT`` or external names."""

    __slots__ = ()

    def __new__(cls, driver, sink, wire_delay_fs=0):
        return super(Net, cls).__new__(cls, driver, sink, int(wire_delay_fs))


class Design(object):
    """
    An immutable flat netlist.

    Cells, nets and external ports are kept in canonical order (cells and
    ports by name, nets by driver), so two designs describing the same
    circuit compare equal however they were assembled.
    """

    def __init__(self, cells=(), nets=(), inputs=(), outputs=()):
        self._cells = tuple(sorted(cells, key=lambda c: c.name))
        self._nets = tuple(sorted(nets, key=lambda n: (n.driver, n.sink, n.wire_delay_fs)))
        self._inputs = tuple(sorted(inputs))
        self._outputs = tuple(sorted(outputs))
        self._by_name = dict((cell.name, cell) for cell in self._cells)

    cells = property(lambda self: self._cells)
    nets = property(lambda self: self._nets)
    inputs = property(lambda self: self._inputs)
    outputs = property(lambda self: self._outputs)

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return self._key() == other._key()

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        return (self._cells, self._nets, self._inputs, self._outputs)

    def __repr__(self):
        return '<Design: %d cells, %d nets, %d inputs, %d outputs>' % (
            len(self._cells), len(self._nets), len(self._inputs), len(self._outputs))

    def __getstate__(self):
        return self._key()

    def __setstate__(self, state):
        self.__init__(*state)

    def cell(self, name):
        return self._by_name[name]

    def has_cell(self, name):
        return name in self._by_name

    def net_name(self, net):
        """Name a net after the external port it touches, else its driver pin."""
        if net.driver in self._inputs:
            return net.driver
        if net.sink in self._outputs:
            return net.sink
        return net.driver

    def net_names(self):
        return [self.net_name(net) for net in self._nets]

    def net_for(self, endpoint):
        """Return the name of the net touching ``endpoint`` (a pin, net or port name)."""
        for net in self._nets:
            if endpoint in (net.driver, net.sink, self.net_name(net)):
                return self.net_name(net)
        raise KeyError(endpoint)

    def replace_cells(self, func):
        return Design([func(cell) for cell in self._cells], self._nets, self._inputs, self._outputs)

    def with_fault(self, *names):
        """Return a copy where the named cells absorb every pulse."""
        missing = [name for name in names if name not in self._by_name]
        if missing:
            raise KeyError('no such cell: %s' % ', '.join(missing))

        def mark(cell):
            if cell.name in names:
                return cell._replace(config=cell.config._replace(faulty=True))
            return cell
        return self.replace_cells(mark)

    def with_delays(self, delays):
        """Return a copy with cell delays replaced from a ``{name: delay_fs}`` map."""
        def retime(cell):
            if cell.name in delays:
                return cell._replace(config=cell.config._replace(delay_fs=int(delays[cell.name])))
            return cell
        return self.replace_cells(retime)


class DesignBuilder(object):
    """Mutable accumulator used by the circuit generators."""

    def __init__(self):
        self.cells = []
        self.nets = []
        self.inputs = []
        self.outputs = []

    def add_cell(self, kind, name, delay_fs=None, faulty=False):
        self.cells.append(CellInstance(name, kind, CellConfig(delay_fs, faulty)))
        return name

    def connect(self, driver, sink, wire_delay_fs=0):
        self.nets.append(Net(driver, sink, wire_delay_fs))

    def add_input(self, name, sink, wire_delay_fs=0):
        self.inputs.append(name)
        self.connect(name, sink, wire_delay_fs)

    def add_output(self, driver, name, wire_delay_fs=0):
        self.outputs.append(name)
        self.connect(driver, name, wire_delay_fs)

    def build(self):
        return Design(self.cells, self.nets, self.inputs, self.outputs)


CELL_RE = re.compile(r'^cell\s+(?P<kind>\S+)\s+(?P<name>\S+)(?P<attrs>(\s+\S+)*)\s*$')
LINK_RE = re.compile(r'^(?P<stmt>net|input|output)\s+(?P<src>\S+)\s*->\s*(?P<dst>\S+)(?P<attrs>(\s+\S+)*)\s*$')
ATTR_RE = re.compile(r'^(?P<key>[a-z_]+)=(?P<value>-?\d+)$')

CELL_ATTRS = ('delay_fs', 'faulty')
LINK_ATTRS = ('wire_delay_fs',)


def _parse_attrs(text, allowed, lineno, column, diagnostics):
    attrs = {}
    for token in text.split():
        match = ATTR_RE.match(token)
        if not match or match.group('key') not in allowed:
            diagnostics.append(Diagnostic(
                ERROR, 'SyntaxError', 'unexpected attribute %r' % token,
                line=lineno, column=column + text.find(token)))
            continue
        attrs[match.group('key')] = int(match.group('value'))
    return attrs


def parse_design(text):
    """
    Parse netlist text into a :class:`Design`.

    :raises NetlistError: carrying every syntax, kind, port and duplicate-name
        diagnostic found; parsing does not stop at the first problem.
    """
    diagnostics = []
    cells = []
    links = []
    names = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].rstrip()
        if not line.strip():
            continue
        column = len(line) - len(line.lstrip()) + 1
        line = line.strip()

        match = CELL_RE.match(line)
        if match:
            kind, name = match.group('kind'), match.group('name')
            attrs = _parse_attrs(match.group('attrs'), CELL_ATTRS, lineno,
                                 column + match.start('attrs'), diagnostics)
            if kind not in CELL_KINDS:
                diagnostics.append(Diagnostic(
                    ERROR, 'UnknownKind', 'unknown cell kind %r' % kind, name,
                    line=lineno, column=column + match.start('kind')))
                continue
            if not is_valid_name(name):
                diagnostics.append(Diagnostic(
                    ERROR, 'SyntaxError', 'invalid cell name %r' % name, name,
                    line=lineno, column=column + match.start('name')))
                continue
            if name in names:
                diagnostics.append(Diagnostic(
                    ERROR, 'DuplicateName', '%r already defined on line %d' % (name, names[name]),
                    name, line=lineno, column=column + match.start('name')))
                continue
            if attrs.get('faulty', 0) not in (0, 1):
                diagnostics.append(Diagnostic(
                    ERROR, 'SyntaxError', 'faulty must be 0 or 1', name,
                    line=lineno, column=column))
            names[name] = lineno
            config = CellConfig(attrs.get('delay_fs'), attrs.get('faulty', 0))
            cells.append(CellInstance(name, kind, config))
            continue

        match = LINK_RE.match(line)
        if match:
            attrs = _parse_attrs(match.group('attrs'), LINK_ATTRS, lineno,
                                 column + match.start('attrs'), diagnostics)
            links.append((lineno, column, match, attrs.get('wire_delay_fs', 0)))
            continue

        diagnostics.append(Diagnostic(
            ERROR, 'SyntaxError', 'cannot parse %r' % line, line=lineno, column=column))

    kinds = dict((cell.name, cell.kind) for cell in cells)
    nets, inputs, outputs = [], [], []
    for lineno, column, match, wire_delay in links:
        stmt, src, dst = match.group('stmt'), match.group('src'), match.group('dst')
        pins = {'net': (src, dst), 'input': (dst,), 'output': (src,)}[stmt]
        ports = {'input': src, 'output': dst}.get(stmt)

        bad = False
        for pin in pins:
            cell, port = split_pin(pin)
            if port is None:
                diagnostics.append(Diagnostic(
                    ERROR, 'SyntaxError', '%r is not of the form name.PORT' % pin, pin,
                    line=lineno, column=column + match.start('src' if pin == src else 'dst')))
                bad = True
            elif cell in kinds and port not in PORTS[kinds[cell]].inputs + PORTS[kinds[cell]].outputs:
                diagnostics.append(Diagnostic(
                    ERROR, 'UnknownPort', '%s cell %r has no port %r' % (kinds[cell], cell, port), pin,
                    line=lineno, column=column + match.start('src' if pin == src else 'dst')))
                bad = True
        if ports is not None:
            if not is_valid_name(ports) or '.' in ports:
                diagnostics.append(Diagnostic(
                    ERROR, 'SyntaxError', 'invalid external port name %r' % ports, ports,
                    line=lineno, column=column))
                bad = True
            elif ports in names:
                diagnostics.append(Diagnostic(
                    ERROR, 'DuplicateName', '%r already defined on line %d' % (ports, names[ports]),
                    ports, line=lineno, column=column))
                bad = True
            else:
                names[ports] = lineno
        if bad:
            continue
        nets.append(Net(src, dst, wire_delay))
        if stmt == 'input':
            inputs.append(src)
        elif stmt == 'output':
            outputs.append(dst)

    if any(d.is_error for d in diagnostics):
        raise NetlistError(diagnostics)
    return Design(cells, nets, inputs, outputs)


def print_design(design):
    """Render ``design`` in the text format; the output reparses equal."""
    lines = [HEADER]
    for cell in design.cells:
        line = 'cell %s %s delay_fs=%d' % (cell.kind, cell.name, cell.config.delay_fs)
        if cell.config.faulty:
            line += ' faulty=1'
        lines.append(line)

    def link(stmt, net):
        line = '%s %s -> %s' % (stmt, net.driver, net.sink)
        if net.wire_delay_fs:
            line += ' wire_delay_fs=%d' % net.wire_delay_fs
        return line

    inputs = set(design.inputs)
    outputs = set(design.outputs)
    for net in design.nets:
        if net.driver in inputs:
            lines.append(link('input', net))
    for net in design.nets:
        if net.driver not in inputs and net.sink not in outputs:
            lines.append(link('net', net))
    for net in design.nets:
        if net.driver not in inputs and net.sink in outputs:
            lines.append(link('output', net))
    return '\n'.join(lines) + '\n'


def check_design(design):
    """
    Run the SFQ structural design-rule check.

    Pulses are point-to-point: every pin takes part in at most one net,
    fan-out needs a SPLIT and fan-in a MERGE. Structural loops are legal.
    Returns a list of :class:`Diagnostic`; errors block simulation.
    """
    diagnostics = []

    def error(code, message, location):
        diagnostics.append(Diagnostic(ERROR, code, message, location))

    def warning(code, message, location):
        diagnostics.append(Diagnostic(WARNING, code, message, location))

    counts = Counter([c.name for c in design.cells] + list(design.inputs) + list(design.outputs))
    for name, count in sorted(counts.items()):
        if count > 1:
            error('DuplicateName', '%r is defined %d times' % (name, count), name)

    for cell in design.cells:
        if cell.kind not in CELL_KINDS:
            error('UnknownKind', 'unknown cell kind %r' % cell.kind, cell.name)
        elif cell.config.delay_fs <= 0:
            error('NonPositiveDelay', 'delay_fs must be positive, got %d' % cell.config.delay_fs,
                  cell.name)

    kinds = dict((cell.name, cell.kind) for cell in design.cells if cell.kind in CELL_KINDS)
    inputs = set(design.inputs)
    outputs = set(design.outputs)
    drivers = defaultdict(list)
    sinks = defaultdict(list)

    def resolve(endpoint, role):
        """Check one endpoint; ``role`` is 'driver' or 'sink'."""
        externals = inputs if role == 'driver' else outputs
        if endpoint in externals:
            return True
        cell, port = split_pin(endpoint)
        if port is None:
            error('UnknownCell', 'no external %s port named %r'
                  % ('input' if role == 'driver' else 'output', endpoint), endpoint)
            return False
        if cell not in kinds:
            error('UnknownCell', 'no cell named %r' % cell, endpoint)
            return False
        table = PORTS[kinds[cell]]
        if port not in table.inputs + table.outputs:
            error('UnknownPort', '%s cell %r has no port %r' % (kinds[cell], cell, port), endpoint)
            return False
        wanted = table.outputs if role == 'driver' else table.inputs
        if port not in wanted:
            error('PinDirection', '%r cannot be used as a net %s' % (endpoint, role), endpoint)
            return False
        return True

    for net in design.nets:
        if net.wire_delay_fs < 0:
            error('NegativeWireDelay', 'wire_delay_fs must not be negative', net.driver)
        if resolve(net.driver, 'driver'):
            drivers[net.driver].append(net)
        if resolve(net.sink, 'sink'):
            sinks[net.sink].append(net)

    for driver, nets in sorted(drivers.items()):
        if len(nets) > 1:
            error('FanoutWithoutSplitter', '%r drives %d nets (%s); use a SPLIT'
                  % (driver, len(nets), ', '.join(n.sink for n in nets)), driver)
    for sink, nets in sorted(sinks.items()):
        if len(nets) > 1:
            error('MultiplyDrivenInput', '%r is driven by %d nets (%s); use a MERGE'
                  % (sink, len(nets), ', '.join(n.driver for n in nets)), sink)

    for cell in design.cells:
        if cell.kind not in CELL_KINDS:
            continue
        for port in PORTS[cell.kind].inputs:
            pin = join_pin(cell.name, port)
            if pin not in sinks:
                warning('UndrivenInput', '%s input %r is not driven' % (cell.kind, pin), pin)
        for port in PORTS[cell.kind].outputs:
            pin = join_pin(cell.name, port)
            if pin not in drivers:
                warning('DanglingOutput', 'pulses leaving %r are dropped' % pin, pin)

    for name in design.inputs:
        if name not in drivers:
            warning('UnusedPort', 'external input %r drives nothing' % name, name)
    for name in design.outputs:
        if name not in sinks:
            warning('UnusedPort', 'external output %r is not driven' % name, name)

    logger.debug('DRC of %r: %d errors, %d warnings', design,
                 sum(d.is_error for d in diagnostics),
                 sum(not d.is_error for d in diagnostics))
    return diagnostics


def errors(diagnostics):
    return [d for d in diagnostics if d.is_error]
