"""
Generators for the binary shifter: the resettable-TFF pulse generator, the
triple-port (D3) bidirectional shift register and the assembled shifter.

Every builder is a pure function of its :class:`ShifterConfig` and returns
an immutable :class:`~pulseflow.netlist.Design`.
"""
import logging
from collections import namedtuple

from django.core.exceptions import ImproperlyConfigured
from django.utils.deconstruct import deconstructible

from pulseflow.cells import CELL_KINDS, D3, JTL, MERGE, RTFF, SFQDC, SINK, SPLIT
from pulseflow.kernel import Simulation
from pulseflow.netlist import DesignBuilder, NetlistError, check_design, errors
from pulseflow.utils import join_pin, setting

logger = logging.getLogger(__name__)

COUNTER_FLOW = 'counter'
CO_FLOW = 'co'

RIGHT = 'R'
LEFT = 'L'

GeneratorReport = namedtuple('GeneratorReport',
                             'operand pulses_emitted readout_time clock_times final_bits')


def ceil_log2(n):
    return max(1, (n - 1).bit_length())


def merge_depths(count):
    """Number of MERGE stages each leaf of a balanced merge tree passes."""
    groups = [[i] for i in range(count)]
    depths = [0] * count
    while len(groups) > 1:
        merged = []
        for j in range(0, len(groups) - 1, 2):
            pair = groups[j] + groups[j + 1]
            for leaf in pair:
                depths[leaf] += 1
            merged.append(pair)
        if len(groups) % 2:
            merged.append(groups[-1])
        groups = merged
    return depths


@deconstructible
class ShifterConfig(object):
    """
    Parameters of the shifter and its generators.

    Every argument left as ``None`` is read from the matching
    ``PULSEFLOW_*`` Django setting, falling back to the documented default.
    The configuration is validated on construction.
    """

    def __init__(self, width=None, bits=None, loop_delay_fs=None, clock_skew_fs=None,
                 clock_flow=None, cell_delay_fs=None, cell_delays=None,
                 master_period_fs=None, guard_periods=None, op_period_fs=None,
                 read_margin_fs=None):
        self.width = setting('PULSEFLOW_WIDTH', 8) if width is None else width
        self.bits = setting('PULSEFLOW_GENERATOR_BITS') if bits is None else bits
        if self.bits is None:
            self.bits = ceil_log2(self.width)
        self.loop_delay_fs = setting('PULSEFLOW_LOOP_DELAY_FS', 30000) \
            if loop_delay_fs is None else loop_delay_fs
        self.clock_skew_fs = setting('PULSEFLOW_CLOCK_SKEW_FS', 2000) \
            if clock_skew_fs is None else clock_skew_fs
        self.clock_flow = setting('PULSEFLOW_CLOCK_FLOW', COUNTER_FLOW) \
            if clock_flow is None else clock_flow
        self.cell_delay_fs = setting('PULSEFLOW_CELL_DELAY_FS', 3000) \
            if cell_delay_fs is None else cell_delay_fs
        self.master_period_fs = setting('PULSEFLOW_MASTER_PERIOD_FS', 100000) \
            if master_period_fs is None else master_period_fs
        self.guard_periods = setting('PULSEFLOW_GUARD_PERIODS', 3) \
            if guard_periods is None else guard_periods
        self._op_period_fs = setting('PULSEFLOW_OP_PERIOD_FS') \
            if op_period_fs is None else op_period_fs
        self.read_margin_fs = setting('PULSEFLOW_READ_MARGIN_FS', 10000) \
            if read_margin_fs is None else read_margin_fs

        self.cell_delays = dict((kind, self.cell_delay_fs) for kind in CELL_KINDS)
        self.cell_delays.update(setting('PULSEFLOW_CELL_DELAYS', {}))
        self.cell_delays.update(cell_delays or {})
        self.validate()

    def __repr__(self):
        return ('<ShifterConfig: width=%d bits=%d loop=%d fs skew=%d fs %s-flow>'
                % (self.width, self.bits, self.loop_delay_fs, self.clock_skew_fs, self.clock_flow))

    def delay(self, kind):
        return self.cell_delays[kind]

    def replace(self, **overrides):
        params = dict(
            width=self.width, bits=self.bits, loop_delay_fs=self.loop_delay_fs,
            clock_skew_fs=self.clock_skew_fs, clock_flow=self.clock_flow,
            cell_delay_fs=self.cell_delay_fs, cell_delays=dict(self.cell_delays),
            master_period_fs=self.master_period_fs, guard_periods=self.guard_periods,
            op_period_fs=self._op_period_fs, read_margin_fs=self.read_margin_fs,
        )
        params.update(overrides)
        return ShifterConfig(**params)

    def validate(self):
        if self.width < 2:
            raise ImproperlyConfigured('PULSEFLOW_WIDTH must be at least 2, got %r' % self.width)
        if self.bits < 1 or 2 ** self.bits < self.width:
            raise ImproperlyConfigured(
                'PULSEFLOW_GENERATOR_BITS=%r cannot count %d shifts' % (self.bits, self.width - 1))
        if self.clock_flow not in (COUNTER_FLOW, CO_FLOW):
            raise ImproperlyConfigured(
                "PULSEFLOW_CLOCK_FLOW must be 'counter' or 'co', got %r" % self.clock_flow)
        for kind, value in sorted(self.cell_delays.items()):
            if kind not in CELL_KINDS:
                raise ImproperlyConfigured('PULSEFLOW_CELL_DELAYS names unknown kind %r' % kind)
            if value <= 0:
                raise ImproperlyConfigured('delay of %s cells must be positive, got %r' % (kind, value))
        for name in ('loop_delay_fs', 'clock_skew_fs', 'master_period_fs', 'guard_periods'):
            if getattr(self, name) <= 0:
                raise ImproperlyConfigured('PULSEFLOW_%s must be positive' % name.upper())
        if self.read_margin_fs < 0:
            raise ImproperlyConfigured('PULSEFLOW_READ_MARGIN_FS must not be negative')
        if self.settle_fs() >= self.loop_delay_fs:
            raise ImproperlyConfigured(
                'clock skew (%d fs) + D3 delay + set-path merges (%d fs) must be shorter '
                'than PULSEFLOW_LOOP_DELAY_FS (%d fs)'
                % (self.clock_skew_fs, self.settle_fs() - self.clock_skew_fs, self.loop_delay_fs))
        self.tune_delay_fs(self.bits)

    def settle_fs(self):
        """Time from a cell's shift read until its bit is stored in the neighbour."""
        return self.clock_skew_fs + self.delay(D3) + 2 * self.delay(MERGE)

    def generator_arrivals(self, bits):
        """Arrival time at the feedback tree output of each DIRECT pulse, before padding."""
        depths = merge_depths(bits)
        return [(i + 1) * self.delay(RTFF) + depths[i] * self.delay(MERGE) for i in range(bits)]

    def tune_delay_fs(self, bits):
        """Delay of the feedback tuning JTL that pads the loop to ``loop_delay_fs``."""
        fixed = self.delay(MERGE) + max(self.generator_arrivals(bits)) + self.delay(SPLIT)
        tune = self.loop_delay_fs - fixed
        if tune <= 0:
            raise ImproperlyConfigured(
                'a %d-bit generator needs more than %d fs per loop; raise '
                'PULSEFLOW_LOOP_DELAY_FS' % (bits, self.loop_delay_fs))
        return tune

    def read_depth(self):
        return ceil_log2(self.width)

    def read_pad_fs(self):
        """
        Delay inserted between the generators' readout and the register.

        The last shift pulse and the readout leave the feedback splitter
        together; the read must reach the register only after the farthest
        cell of the clock chain has stored its shifted bit.
        """
        readout_path = (2 * self.delay(MERGE) + self.bits * self.delay(RTFF) +
                        self.read_depth() * self.delay(SPLIT))
        landed = (self.width * self.clock_skew_fs + self.delay(D3) + 2 * self.delay(MERGE) +
                  self.read_margin_fs)
        return max(self.delay(JTL), landed - readout_path)

    def worst_case_latency_fs(self):
        """Operation start to the last converter change for the largest shift."""
        return (self.cell_delay_fs + self.delay(MERGE) +
                (2 ** self.bits - 1) * self.loop_delay_fs +
                self.bits * self.delay(RTFF) + self.delay(MERGE) + self.read_pad_fs() +
                self.read_depth() * self.delay(SPLIT) + self.delay(D3) + self.delay(SFQDC))

    @property
    def op_period_fs(self):
        """
        Spacing between operations of a program.

        Defaults to ``guard_periods`` master periods, stretched by whole
        master periods when the worst-case latency does not fit.
        """
        worst = self.worst_case_latency_fs()
        if self._op_period_fs is not None:
            if self._op_period_fs <= worst:
                raise ImproperlyConfigured(
                    'PULSEFLOW_OP_PERIOD_FS=%d fs is shorter than the worst-case latency of '
                    '%d fs' % (self._op_period_fs, worst))
            return self._op_period_fs
        period = self.guard_periods * self.master_period_fs
        if period <= worst:
            period = (worst // self.master_period_fs + 1) * self.master_period_fs
            logger.info('operation period stretched to %d fs for a %d-bit shifter',
                        period, self.width)
        return period


def encode_shift_amount(k, bits):
    """Return the generator operand for a shift by ``k``: the ``bits``-bit complement."""
    top = 2 ** bits - 1
    if not 0 <= k <= top:
        raise ValueError('shift amount %r does not fit in %d bits' % (k, bits))
    return top - k


def generator_clock_net(prefix):
    return join_pin('%s_fb_split' % prefix, 'OUT2')


def generator_readout_net(prefix, bits):
    return join_pin('%s_ff%d' % (prefix, bits - 1), 'INVERTED')


def _merge_tree(builder, prefix, sources, delay):
    """Combine driver pins through a balanced MERGE tree; return the output pin."""
    nodes = list(sources)
    level = 0
    while len(nodes) > 1:
        merged = []
        for j in range(0, len(nodes) - 1, 2):
            name = builder.add_cell(MERGE, '%s_m%d_%d' % (prefix, level, j // 2), delay)
            builder.connect(nodes[j], join_pin(name, 'A'))
            builder.connect(nodes[j + 1], join_pin(name, 'B'))
            merged.append(join_pin(name, 'OUT'))
        if len(nodes) % 2:
            merged.append(nodes[-1])
        nodes = merged
        level += 1
    return nodes[0]


def _split_tree(builder, prefix, sinks, delay):
    """Drive every sink pin from one input through a complete SPLIT tree."""
    depth = ceil_log2(len(sinks))
    leaves = list(sinks)
    for j in range(len(leaves), 2 ** depth):
        leaves.append(join_pin(builder.add_cell(SINK, '%s_spare%d' % (prefix, j)), 'IN'))
    level = 0
    while len(leaves) > 1:
        parents = []
        for j in range(0, len(leaves), 2):
            name = builder.add_cell(SPLIT, '%s_s%d_%d' % (prefix, level, j // 2), delay)
            builder.connect(join_pin(name, 'OUT1'), leaves[j])
            builder.connect(join_pin(name, 'OUT2'), leaves[j + 1])
            parents.append(join_pin(name, 'IN'))
        leaves = parents
        level += 1
    return leaves[0]


def _clock_chain(builder, prefix, sinks, skew):
    """A SPLIT chain reaching ``sinks`` in order, ``skew`` apart; returns the entry pin."""
    entry = previous = None
    for stage, sink in enumerate(sinks[:-1]):
        name = builder.add_cell(SPLIT, '%s_clk%d' % (prefix, stage), skew)
        builder.connect(join_pin(name, 'OUT1'), sink)
        if previous is None:
            entry = join_pin(name, 'IN')
        else:
            builder.connect(previous, join_pin(name, 'IN'))
        previous = join_pin(name, 'OUT2')
    name = builder.add_cell(JTL, '%s_clk%d' % (prefix, len(sinks) - 1), skew)
    builder.connect(join_pin(name, 'OUT'), sinks[-1])
    if previous is None:
        entry = join_pin(name, 'IN')
    else:
        builder.connect(previous, join_pin(name, 'IN'))
    return entry


def add_generator(builder, prefix, bits, config):
    """
    Add a ``bits``-stage resettable-TFF ring generator.

    Returns a port map: ``A<i>`` and ``LAUNCH`` map to sink pins,
    ``CLOCK_OUT`` and ``READOUT`` to driver pins.
    """
    if bits < 1:
        raise ImproperlyConfigured('a generator needs at least one bit, got %r' % bits)
    tune = config.tune_delay_fs(bits)
    d_rtff = config.delay(RTFF)

    launch = builder.add_cell(MERGE, '%s_launch' % prefix, config.delay(MERGE))
    ffs = [builder.add_cell(RTFF, '%s_ff%d' % (prefix, i), d_rtff) for i in range(bits)]
    builder.connect(join_pin(launch, 'OUT'), join_pin(ffs[0], 'T'))
    for here, there in zip(ffs, ffs[1:]):
        builder.connect(join_pin(here, 'INVERTED'), join_pin(there, 'T'))

    # Pad each DIRECT line so every carry depth closes the loop in the same time.
    arrivals = config.generator_arrivals(bits)
    target = max(arrivals)
    sources = []
    for i, ff in enumerate(ffs):
        source = join_pin(ff, 'DIRECT')
        if arrivals[i] < target:
            pad = builder.add_cell(JTL, '%s_pad%d' % (prefix, i), target - arrivals[i])
            builder.connect(source, join_pin(pad, 'IN'))
            source = join_pin(pad, 'OUT')
        sources.append(source)
    feedback = _merge_tree(builder, '%s_fb' % prefix, sources, config.delay(MERGE))

    tuning = builder.add_cell(JTL, '%s_tune' % prefix, tune)
    split = builder.add_cell(SPLIT, '%s_fb_split' % prefix, config.delay(SPLIT))
    builder.connect(feedback, join_pin(tuning, 'IN'))
    builder.connect(join_pin(tuning, 'OUT'), join_pin(split, 'IN'))
    builder.connect(join_pin(split, 'OUT1'), join_pin(launch, 'B'))

    ports = dict(('A%d' % i, join_pin(ff, 'SET')) for i, ff in enumerate(ffs))
    ports['LAUNCH'] = join_pin(launch, 'A')
    ports['CLOCK_OUT'] = join_pin(split, 'OUT2')
    ports['READOUT'] = join_pin(ffs[-1], 'INVERTED')
    return ports


def add_register(builder, prefix, config):
    """
    Add a ``config.width``-bit bidirectional register of D3 cells.

    Port 1 shifts right (bit i to i+1), port 2 shifts left (bit i to i-1)
    and port 3 reads out through SFQ/DC converters named ``O<i>``.
    Returns a port map of sink pins: ``IN<i>``, ``SR_CLK``, ``SL_CLK`` and
    ``READ_CLK``.
    """
    width = config.width
    merge_delay = config.delay(MERGE)
    cells = [builder.add_cell(D3, '%s_d3_%d' % (prefix, i), config.delay(D3)) for i in range(width)]
    ports = {}

    for i, cell in enumerate(cells):
        load = builder.add_cell(MERGE, '%s_load%d' % (prefix, i), merge_delay)
        builder.connect(join_pin(load, 'OUT'), join_pin(cell, 'SET'))
        ports['IN%d' % i] = join_pin(load, 'A')

        sources = []
        if i > 0:
            sources.append(join_pin(cells[i - 1], 'O1'))
        if i < width - 1:
            sources.append(join_pin(cells[i + 1], 'O2'))
        if len(sources) == 2:
            shift = builder.add_cell(MERGE, '%s_shift%d' % (prefix, i), merge_delay)
            builder.connect(sources[0], join_pin(shift, 'A'))
            builder.connect(sources[1], join_pin(shift, 'B'))
            builder.connect(join_pin(shift, 'OUT'), join_pin(load, 'B'))
        else:
            builder.connect(sources[0], join_pin(load, 'B'))

        converter = builder.add_cell(SFQDC, 'O%d' % i, config.delay(SFQDC))
        builder.connect(join_pin(cell, 'O3'), join_pin(converter, 'IN'))

    # Logical shift: bits leaving either end are absorbed.
    right_end = builder.add_cell(SINK, '%s_sr_end' % prefix, config.delay(SINK))
    left_end = builder.add_cell(SINK, '%s_sl_end' % prefix, config.delay(SINK))
    builder.connect(join_pin(cells[-1], 'O1'), join_pin(right_end, 'IN'))
    builder.connect(join_pin(cells[0], 'O2'), join_pin(left_end, 'IN'))

    ascending = list(range(width))
    descending = ascending[::-1]
    if config.clock_flow == COUNTER_FLOW:
        right_order, left_order = descending, ascending
    else:
        right_order, left_order = ascending, descending
    ports['SR_CLK'] = _clock_chain(builder, '%s_sr' % prefix,
                                   [join_pin(cells[i], 'IN1') for i in right_order],
                                   config.clock_skew_fs)
    ports['SL_CLK'] = _clock_chain(builder, '%s_sl' % prefix,
                                   [join_pin(cells[i], 'IN2') for i in left_order],
                                   config.clock_skew_fs)
    ports['READ_CLK'] = _split_tree(builder, '%s_read' % prefix,
                                    [join_pin(cell, 'IN3') for cell in cells],
                                    config.delay(SPLIT))
    return ports


def _finish(builder):
    design = builder.build()
    problems = errors(check_design(design))
    if problems:
        raise NetlistError(problems)
    return design


def build_generator(bits=None, config=None):
    """Standalone generator with ports A0.., LAUNCH, CLOCK_OUT and READOUT."""
    config = config or ShifterConfig()
    bits = config.bits if bits is None else bits
    builder = DesignBuilder()
    ports = add_generator(builder, 'gen', bits, config)
    for i in range(bits):
        builder.add_input('A%d' % i, ports['A%d' % i])
    builder.add_input('LAUNCH', ports['LAUNCH'])
    builder.add_output(ports['CLOCK_OUT'], 'CLOCK_OUT')
    builder.add_output(ports['READOUT'], 'READOUT')
    return _finish(builder)


def build_register(width=None, config=None):
    """Standalone register with ports IN0.., SR_CLK, SL_CLK, READ_CLK and converters O0.."""
    config = config or ShifterConfig()
    if width is not None and width != config.width:
        config = config.replace(width=width, bits=max(config.bits, ceil_log2(width)))
    builder = DesignBuilder()
    ports = add_register(builder, 'reg', config)
    for name in sorted(ports):
        builder.add_input(name, ports[name])
    return _finish(builder)


def build_shifter(config=None):
    """
    The assembled binary shifter.

    Inputs are IN<i>, SRA<j>, SLA<j>, SR_LAUNCH and SL_LAUNCH; the results
    are the converter levels O<i>. Both generators' readouts merge into the
    register's parallel read, so only one generator may run per operation.
    """
    config = config or ShifterConfig()
    builder = DesignBuilder()
    register = add_register(builder, 'reg', config)
    right = add_generator(builder, 'sr', config.bits, config)
    left = add_generator(builder, 'sl', config.bits, config)

    for i in range(config.width):
        builder.add_input('IN%d' % i, register['IN%d' % i])
    for j in range(config.bits):
        builder.add_input('SRA%d' % j, right['A%d' % j])
        builder.add_input('SLA%d' % j, left['A%d' % j])
    builder.add_input('SR_LAUNCH', right['LAUNCH'])
    builder.add_input('SL_LAUNCH', left['LAUNCH'])

    builder.connect(right['CLOCK_OUT'], register['SR_CLK'])
    builder.connect(left['CLOCK_OUT'], register['SL_CLK'])

    read = builder.add_cell(MERGE, 'read_merge', config.delay(MERGE))
    settle = builder.add_cell(JTL, 'read_settle', config.read_pad_fs())
    builder.connect(right['READOUT'], join_pin(read, 'A'))
    builder.connect(left['READOUT'], join_pin(read, 'B'))
    builder.connect(join_pin(read, 'OUT'), join_pin(settle, 'IN'))
    builder.connect(join_pin(settle, 'OUT'), register['READ_CLK'])

    design = _finish(builder)
    logger.debug('built %r for %r', design, config)
    return design


def probe_generator(bits, operand, config=None):
    """Simulate a standalone generator preloaded with ``operand`` and launched once."""
    config = config or ShifterConfig()
    if not 0 <= operand < 2 ** bits:
        raise ValueError('operand %r does not fit in %d bits' % (operand, bits))
    simulation = Simulation(build_generator(bits, config))
    stimulus = [(0, 'A%d' % i) for i in range(bits) if (operand >> i) & 1]
    stimulus.append((config.cell_delay_fs, 'LAUNCH'))
    trace = simulation.run(stimulus)

    clock_times = trace.pulses_on('CLOCK_OUT')
    readouts = trace.pulses_on('READOUT')
    final_bits = tuple(trace.final_states['gen_ff%d' % i].stored_bit for i in range(bits))
    return GeneratorReport(operand, len(clock_times), readouts[0] if readouts else None,
                           clock_times, final_bits)
