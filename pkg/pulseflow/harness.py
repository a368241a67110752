"""
Verification harness: a golden shift model, operation programs compiled to
timed stimulus, the staircase and exhaustive test patterns, timing-margin
sweeps and JSON-ready run reports.
"""
import logging
import random
from bisect import bisect_left
from collections import defaultdict, namedtuple
from concurrent.futures import ProcessPoolExecutor

from pulseflow.circuits import (
    LEFT, RIGHT, ShifterConfig, build_shifter, ceil_log2, encode_shift_amount,
    generator_clock_net, generator_readout_net,
)
from pulseflow.kernel import Simulation
from pulseflow.utils import format_word, setting, word_bits

logger = logging.getLogger(__name__)

DIRECTIONS = (RIGHT, LEFT)

# Input names and generator prefixes of each direction in the assembled shifter.
GENERATORS = {
    RIGHT: ('sr', 'SRA', 'SR_LAUNCH'),
    LEFT: ('sl', 'SLA', 'SL_LAUNCH'),
}

Load = namedtuple('Load', 'word')
Shift = namedtuple('Shift', 'direction k')
Expect = namedtuple('Expect', 'word')

Operation = namedtuple('Operation', 'word direction k expected')

OperationWindow = namedtuple('OperationWindow', [
    'index', 'start', 'end', 'launch', 'word', 'direction', 'k', 'expected',
    'clock_net', 'readout_net',
])


class ProgramError(ValueError):
    pass


def golden_shift(word, k, direction, width=8, bits=None):
    """
    Logical shift by bit index: right moves bit i to i+k, left moves bit i
    to i-k; bits pushed past either end are dropped and zeros fill in.
    """
    bits = ceil_log2(width) if bits is None else bits
    if not 0 <= k < 2 ** bits:
        raise ValueError('shift amount %r does not fit in %d bits' % (k, bits))
    if direction == RIGHT:
        return (word << k) & (2 ** width - 1)
    if direction == LEFT:
        return word >> k
    raise ValueError('direction must be %r or %r, got %r' % (RIGHT, LEFT, direction))


class OpProgram(object):
    """An ordered LOAD / SHIFT / EXPECT sequence for a ``width``-bit shifter."""

    def __init__(self, steps=(), width=8):
        self.steps = list(steps)
        self.width = width
        self._operations = self._group()

    def __len__(self):
        return len(self._operations)

    def __iter__(self):
        return iter(self._operations)

    def __repr__(self):
        return '<OpProgram: %d operations, width %d>' % (len(self), self.width)

    def _group(self):
        operations = []
        pending = []
        for position, step in enumerate(self.steps):
            pending.append(step)
            if isinstance(step, Expect):
                if len(pending) != 3 or not isinstance(pending[0], Load) \
                        or not isinstance(pending[1], Shift):
                    raise ProgramError('step %d: an operation is LOAD, SHIFT, EXPECT; got %s'
                                       % (position, ', '.join(type(s).__name__ for s in pending)))
                load, shift, expect = pending
                for word in (load.word, expect.word):
                    if not 0 <= word < 2 ** self.width:
                        raise ProgramError('step %d: word %r does not fit in %d bits'
                                           % (position, word, self.width))
                if shift.direction not in DIRECTIONS:
                    raise ProgramError('step %d: unknown direction %r' % (position, shift.direction))
                operations.append(Operation(load.word, shift.direction, shift.k, expect.word))
                pending = []
            elif len(pending) > 2:
                raise ProgramError('step %d: operation is missing its EXPECT' % position)
        if pending:
            raise ProgramError('program ends inside an operation')
        return operations

    @classmethod
    def from_operations(cls, operations, width=8):
        steps = []
        for op in operations:
            steps.extend([Load(op.word), Shift(op.direction, op.k), Expect(op.expected)])
        return cls(steps, width)


def staircase_pattern(width=8):
    """Walk bit 0 right by 0..N-1, then bit N-1 left by 0..N-1."""
    if width < 2:
        raise ValueError('width must be at least 2')
    operations = []
    for k in range(width):
        operations.append(Operation(1, RIGHT, k, 1 << k))
    top = width - 1
    for k in range(width):
        operations.append(Operation(1 << top, LEFT, k, 1 << (top - k)))
    return OpProgram.from_operations(operations, width)


def word_program(word, width, bits=None, shifts=None):
    """Every shift amount in both directions applied to one word."""
    shifts = range(width) if shifts is None else shifts
    operations = [Operation(word, direction, k, golden_shift(word, k, direction, width, bits))
                  for direction in DIRECTIONS for k in shifts]
    return OpProgram.from_operations(operations, width)


def random_words(width, count, seed=0):
    """``count`` distinct words drawn reproducibly; every word if the space is small."""
    space = 2 ** width
    if count >= space:
        return list(range(space))
    return sorted(random.Random(seed).sample(range(space), count))


def compile_program(program, design, config):
    """
    Turn ``program`` into ``(stimulus, windows)``.

    Each operation starts with SET pulses on IN<i> for the word's 1 bits
    and on the selected generator's A<j> for the 1 bits of the encoded
    shift amount; the LAUNCH follows one cell delay later. Operations are
    ``config.op_period_fs`` apart.
    """
    if program.width != config.width:
        raise ProgramError('program is for %d bits, shifter has %d' % (program.width, config.width))
    period = config.op_period_fs
    inputs = set(design.inputs)
    stimulus = []
    windows = []
    for index, op in enumerate(program):
        prefix, operand_port, launch_port = GENERATORS[op.direction]
        try:
            operand = encode_shift_amount(op.k, config.bits)
        except ValueError as e:
            raise ProgramError('operation %d: %s' % (index, e))

        start = index * period
        pulses = ['IN%d' % i for i in word_bits(op.word, config.width)]
        pulses += ['%s%d' % (operand_port, j) for j in word_bits(operand, config.bits)]
        launch = start + config.cell_delay_fs
        for port in pulses + [launch_port]:
            if port not in inputs:
                raise ProgramError('design has no input %r' % port)
        stimulus.extend((start, port) for port in pulses)
        stimulus.append((launch, launch_port))
        windows.append(OperationWindow(
            index, start, start + period, launch, op.word, op.direction, op.k, op.expected,
            generator_clock_net(prefix), generator_readout_net(prefix, config.bits)))
    return stimulus, windows


class OperationRecord(namedtuple('OperationRecord', [
        'index', 'word', 'direction', 'k', 'expected', 'observed', 'toggles',
        'shift_pulses', 'latency_fs', 'output_latency_fs', 'diagnostics', 'divergent_output'])):
    __slots__ = ()

    @property
    def key(self):
        return (self.word, self.k, self.direction)

    @property
    def passed(self):
        return (self.observed == self.expected and not self.diagnostics and
                self.shift_pulses == self.k and self.latency_fs is not None and
                all(count == ((self.expected >> i) & 1) for i, count in enumerate(self.toggles)))

    def to_dict(self, width):
        return {
            'index': self.index,
            'word': format_word(self.word, width),
            'direction': self.direction,
            'k': self.k,
            'expected': format_word(self.expected, width),
            'observed': format_word(self.observed, width),
            'toggles': list(self.toggles),
            'shift_pulses': self.shift_pulses,
            'latency_fs': self.latency_fs,
            'output_latency_fs': self.output_latency_fs,
            'diagnostics': list(self.diagnostics),
            'divergent_output': self.divergent_output,
            'passed': self.passed,
        }


class RunReport(object):
    def __init__(self, records, config, trace=None):
        self.records = list(records)
        self.config = config
        self.trace = trace

    def __repr__(self):
        return '<RunReport: %d operations, %d mismatches>' % (len(self.records), len(self.mismatches))

    @property
    def mismatches(self):
        return [record for record in self.records if not record.passed]

    @property
    def passed(self):
        return not self.mismatches

    @property
    def max_latency_fs(self):
        latencies = [r.latency_fs for r in self.records if r.latency_fs is not None]
        return max(latencies) if latencies else None

    @property
    def max_latency_cycles(self):
        latency = self.max_latency_fs
        if latency is None:
            return None
        return -(-latency // self.config.master_period_fs)

    @classmethod
    def merge(cls, reports, config):
        """Combine sweep shards; the result is ordered by (word, k, direction)."""
        records = sorted((r for report in reports for r in report.records), key=lambda r: r.key)
        return cls(records, config)

    def to_dict(self):
        config = self.config
        return {
            'config': {
                'width': config.width,
                'bits': config.bits,
                'loop_delay_fs': config.loop_delay_fs,
                'clock_skew_fs': config.clock_skew_fs,
                'clock_flow': config.clock_flow,
                'master_period_fs': config.master_period_fs,
                'op_period_fs': config.op_period_fs,
            },
            'operations': [record.to_dict(config.width) for record in self.records],
            'summary': {
                'operations': len(self.records),
                'mismatches': len(self.mismatches),
                'max_latency_fs': self.max_latency_fs,
                'max_latency_cycles': self.max_latency_cycles,
                'passed': self.passed,
            },
        }


def _window_slice(times, window):
    return times[bisect_left(times, window.start):bisect_left(times, window.end)]


def analyse(trace, windows, config):
    """Derive one :class:`OperationRecord` per window from a finished trace."""
    watched = set()
    for window in windows:
        watched.update((window.clock_net, window.readout_net))
    pulses = defaultdict(list)
    for record in trace.records:
        if record.net in watched:
            pulses[record.net].append(record.time)
    level_times = [change.time for change in trace.levels]
    note_times = [note.time for note in trace.diagnostics]

    records = []
    for window in windows:
        lo, hi = bisect_left(level_times, window.start), bisect_left(level_times, window.end)
        changes = trace.levels[lo:hi]
        toggles = [0] * config.width
        for change in changes:
            toggles[int(change.port[1:])] += 1
        observed = sum(1 << i for i, count in enumerate(toggles) if count % 2)

        readouts = _window_slice(pulses[window.readout_net], window)
        latency = readouts[0] - window.launch if len(readouts) == 1 else None
        output_latency = changes[-1].time - window.launch if changes else None

        lo, hi = bisect_left(note_times, window.start), bisect_left(note_times, window.end)
        notes = ['%s %s: %s' % (note.code, note.cell, note.message) for note in trace.diagnostics[lo:hi]]
        if len(readouts) != 1:
            notes.append('Readout fired %d times' % len(readouts))

        divergent = None
        for i, count in enumerate(toggles):
            if count != (window.expected >> i) & 1:
                divergent = 'O%d' % i
                break

        records.append(OperationRecord(
            window.index, window.word, window.direction, window.k, window.expected, observed,
            tuple(toggles), len(_window_slice(pulses[window.clock_net], window)),
            latency, output_latency, tuple(notes), divergent))
    return records


def run_program(design, program, config, simulation=None):
    """Compile, simulate and analyse ``program``; the trace rides on the report."""
    simulation = simulation or Simulation(design)
    stimulus, windows = compile_program(program, design, config)
    trace = simulation.run(stimulus)
    return RunReport(analyse(trace, windows, config), config, trace)


def _sweep_words(job):
    design, config, words, max_events = job
    simulation = Simulation(design, max_events=max_events)
    records = []
    for word in words:
        program = word_program(word, config.width, config.bits)
        records.extend(run_program(design, program, config, simulation).records)
    return RunReport(records, config)


def _chunks(items, count):
    size = -(-len(items) // count) if items else 1
    return [items[i:i + size] for i in range(0, len(items), size)]


def exhaustive_sweep(config=None, words=None, fail_cells=(), jobs=1, max_events=None):
    """
    Run every word (or ``words``) through every shift in both directions
    and compare with :func:`golden_shift`.

    ``fail_cells`` names cells to mark faulty. ``jobs`` > 1 spreads the
    words over worker processes, each with its own simulation.
    """
    config = config or ShifterConfig()
    if config.width > 16:
        raise ValueError('exhaustive sweeps are limited to 16 bits, got %d' % config.width)
    words = list(range(2 ** config.width)) if words is None else list(words)
    design = build_shifter(config)
    if fail_cells:
        design = design.with_fault(*fail_cells)
    if max_events is None:
        max_events = setting('PULSEFLOW_MAX_EVENTS', 10 ** 7)

    logger.info('sweeping %d words through %r with %d job(s)', len(words), config, jobs)
    jobs = max(1, min(jobs, len(words) or 1))
    shards = [(design, config, chunk, max_events) for chunk in _chunks(words, jobs)]
    if jobs == 1:
        reports = [_sweep_words(shard) for shard in shards]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            reports = list(executor.map(_sweep_words, shards))
    report = RunReport.merge(reports, config)
    logger.info('%d operations, %d mismatches', len(report.records), len(report.mismatches))
    return report


MarginTrial = namedtuple('MarginTrial', 'trial settling_holds operations mismatches passed')


def perturb_delays(design, pct, rng):
    """Scale every cell delay by an independent factor in [1 - pct%, 1 + pct%]."""
    spread = pct / 100.0
    delays = {}
    for cell in design.cells:
        factor = 1 + rng.uniform(-spread, spread)
        delays[cell.name] = max(1, int(round(cell.config.delay_fs * factor)))
    return design.with_delays(delays)


def _settling_holds(design, config, pct):
    """Worst-case register settling check on a retimed design against the slowest-case loop."""
    def worst(prefix):
        return max(cell.config.delay_fs for cell in design.cells if cell.name.startswith(prefix))
    skew = max(worst('reg_sr_clk'), worst('reg_sl_clk'))
    merge = max(worst('reg_load'), worst('reg_shift'))
    loop = config.loop_delay_fs * (1 - pct / 100.0)
    return skew + worst('reg_d3_') + 2 * merge < loop


def margin_sweep(config=None, perturb_pct=20, trials=10, seed=0, words_per_trial=16):
    """
    Re-run the staircase plus sampled words on designs whose cell delays
    are independently perturbed by up to ``perturb_pct`` percent.

    Pacing is relaxed to ten master periods (at least twice the nominal
    worst-case latency) so retimed operations never overlap.
    """
    config = config or ShifterConfig()
    relaxed = config.replace(op_period_fs=max(10 * config.master_period_fs,
                                              2 * config.worst_case_latency_fs()))
    base = build_shifter(config)
    operations = list(staircase_pattern(config.width))
    for word in random_words(config.width, words_per_trial, seed):
        operations.extend(word_program(word, config.width, config.bits))
    program = OpProgram.from_operations(operations, config.width)

    results = []
    for trial in range(trials):
        rng = random.Random(seed * 100003 + trial)
        design = perturb_delays(base, perturb_pct, rng)
        report = run_program(design, program, relaxed)
        results.append(MarginTrial(trial, _settling_holds(design, config, perturb_pct), len(report.records),
                                   len(report.mismatches), report.passed))
        logger.info('margin trial %d: %d mismatches', trial, len(report.mismatches))
    return results

