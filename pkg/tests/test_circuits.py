from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase, override_settings

from pulseflow.cells import ring_feedback_count
from pulseflow.circuits import (
    ShifterConfig, build_generator, build_register, build_shifter, ceil_log2,
    encode_shift_amount, merge_depths, probe_generator,
)
from pulseflow.kernel import Simulation
from pulseflow.netlist import check_design, errors


class ShifterConfigTest(SimpleTestCase):
    def test_defaults(self):
        config = ShifterConfig()
        self.assertEqual(config.width, 8)
        self.assertEqual(config.bits, 3)
        self.assertEqual(config.loop_delay_fs, 30000)
        self.assertEqual(config.clock_skew_fs, 2000)
        self.assertEqual(config.master_period_fs, 100000)
        self.assertEqual(config.op_period_fs, 300000)

    def test_derived_timing(self):
        config = ShifterConfig()
        self.assertEqual(config.tune_delay_fs(3), 12000)
        self.assertEqual(config.read_pad_fs(), 11000)
        self.assertEqual(config.worst_case_latency_fs(), 254000)

    @override_settings(PULSEFLOW_WIDTH=16)
    def test_width_from_settings(self):
        config = ShifterConfig()
        self.assertEqual((config.width, config.bits), (16, 4))
        self.assertEqual(config.tune_delay_fs(4), 6000)

    @override_settings(PULSEFLOW_CELL_DELAYS={'D3': 3500})
    def test_per_kind_delays(self):
        config = ShifterConfig()
        self.assertEqual(config.delay('D3'), 3500)
        self.assertEqual(config.delay('JTL'), 3000)
        self.assertEqual(build_shifter(config).cell('reg_d3_0').config.delay_fs, 3500)

    def test_keyword_wins_over_settings(self):
        with self.settings(PULSEFLOW_LOOP_DELAY_FS=40000):
            self.assertEqual(ShifterConfig(loop_delay_fs=35000).loop_delay_fs, 35000)
            self.assertEqual(ShifterConfig().loop_delay_fs, 40000)

    def test_invalid(self):
        for kwargs in ({'width': 1}, {'width': 8, 'bits': 2}, {'clock_flow': 'sideways'},
                       {'cell_delays': {'NAND': 1}}, {'cell_delays': {'JTL': 0}},
                       {'clock_skew_fs': 25000}, {'loop_delay_fs': 15000}, {'read_margin_fs': -1}):
            with self.assertRaises(ImproperlyConfigured):
                ShifterConfig(**kwargs)

    def test_explicit_op_period_must_cover_latency(self):
        self.assertEqual(ShifterConfig(op_period_fs=1000000).op_period_fs, 1000000)
        with self.assertRaises(ImproperlyConfigured):
            ShifterConfig(op_period_fs=200000).op_period_fs

    def test_op_period_stretches(self):
        config = ShifterConfig(width=16)
        self.assertEqual(config.worst_case_latency_fs(), 510000)
        self.assertEqual(config.op_period_fs, 600000)

    def test_replace(self):
        config = ShifterConfig().replace(clock_flow='co')
        self.assertEqual(config.clock_flow, 'co')
        self.assertEqual(config.width, 8)

    def test_deconstruct(self):
        path, args, kwargs = ShifterConfig(width=4).deconstruct()
        self.assertEqual(path, 'pulseflow.circuits.ShifterConfig')
        self.assertEqual(kwargs, {'width': 4})


class HelpersTest(SimpleTestCase):
    def test_encode_shift_amount(self):
        self.assertEqual(encode_shift_amount(0, 3), 7)
        self.assertEqual(encode_shift_amount(7, 3), 0)
        self.assertEqual(encode_shift_amount(3, 3), 4)
        with self.assertRaises(ValueError):
            encode_shift_amount(8, 3)
        with self.assertRaises(ValueError):
            encode_shift_amount(-1, 3)

    def test_ceil_log2(self):
        self.assertEqual([ceil_log2(n) for n in (2, 3, 4, 5, 8, 9, 16)], [1, 2, 2, 3, 3, 4, 4])

    def test_merge_depths(self):
        self.assertEqual(merge_depths(1), [0])
        self.assertEqual(merge_depths(3), [2, 2, 1])
        self.assertEqual(merge_depths(4), [2, 2, 2, 2])


class GeneratorTest(SimpleTestCase):
    def test_ports(self):
        design = build_generator(3)
        self.assertEqual(design.inputs, ('A0', 'A1', 'A2', 'LAUNCH'))
        self.assertEqual(design.outputs, ('CLOCK_OUT', 'READOUT'))
        self.assertEqual(errors(check_design(design)), [])

    def test_no_shift(self):
        report = probe_generator(3, 7)
        self.assertEqual(report.pulses_emitted, 0)
        self.assertEqual(report.readout_time, 3000 + 12000)

    def test_full_shift(self):
        report = probe_generator(3, 0)
        self.assertEqual(report.pulses_emitted, 7)
        diffs = [b - a for a, b in zip(report.clock_times, report.clock_times[1:])]
        self.assertEqual(diffs, [30000] * 6)
        self.assertEqual(report.clock_times[0], 33000)
        self.assertEqual(report.readout_time, 3000 + 12000 + 7 * 30000)

    def test_pulse_count_law(self):
        for bits in (2, 3, 4):
            for operand in range(2 ** bits):
                report = probe_generator(bits, operand)
                self.assertEqual(report.pulses_emitted, 2 ** bits - 1 - operand)
                self.assertEqual(report.pulses_emitted, ring_feedback_count(bits, operand)[0])
                self.assertEqual(report.final_bits, (0,) * bits)

    def test_readout_fires_once(self):
        design = build_generator(3)
        trace = Simulation(design).run([(0, 'A0'), (0, 'A2'), (3000, 'LAUNCH')])
        self.assertEqual(len(trace.pulses_on('READOUT')), 1)
        self.assertEqual(len(trace.pulses_on('CLOCK_OUT')), 2)
        self.assertEqual(trace.diagnostics, [])

    def test_operand_range(self):
        with self.assertRaises(ValueError):
            probe_generator(3, 8)


class RegisterTest(SimpleTestCase):
    def setUp(self):
        self.simulation = Simulation(build_register())

    def test_ports(self):
        design = self.simulation.design
        self.assertEqual(design.inputs, tuple(sorted(['IN%d' % i for i in range(8)] +
                                                     ['READ_CLK', 'SL_CLK', 'SR_CLK'])))
        self.assertEqual(sorted(c.name for c in design.cells if c.kind == 'SFQDC'),
                         sorted('O%d' % i for i in range(8)))

    def test_one_right_shift(self):
        trace = self.simulation.run([(0, 'IN0'), (10000, 'SR_CLK'), (60000, 'READ_CLK')])
        self.assertEqual(trace.final_levels(), {'O1': 1})

    def test_no_shift(self):
        trace = self.simulation.run([(0, 'IN0'), (60000, 'READ_CLK')])
        self.assertEqual(trace.final_levels(), {'O0': 1})

    def test_three_left_shifts(self):
        stimulus = [(0, 'IN7'), (10000, 'SL_CLK'), (40000, 'SL_CLK'), (70000, 'SL_CLK'),
                    (150000, 'READ_CLK')]
        self.assertEqual(self.simulation.run(stimulus).final_levels(), {'O4': 1})

    def test_read_drains_register(self):
        trace = self.simulation.run([(0, 'IN2'), (0, 'IN5'), (60000, 'READ_CLK')])
        self.assertEqual(trace.final_levels(), {'O2': 1, 'O5': 1})
        self.assertTrue(all(state.stored_bit == 0 for state in trace.final_states.values()))

    def test_shift_out_of_range(self):
        trace = self.simulation.run([(0, 'IN7'), (10000, 'SR_CLK'), (60000, 'READ_CLK')])
        self.assertEqual(trace.final_levels(), {})

    def test_other_width(self):
        design = build_register(5)
        self.assertEqual(errors(check_design(design)), [])
        trace = Simulation(design).run([(0, 'IN4'), (10000, 'SL_CLK'), (60000, 'READ_CLK')])
        self.assertEqual(trace.final_levels(), {'O3': 1})


class ShifterTest(SimpleTestCase):
    def setUp(self):
        self.simulation = Simulation(build_shifter())

    def operate(self, word, operand, direction):
        prefix = 'SRA' if direction == 'R' else 'SLA'
        stimulus = [(0, 'IN%d' % i) for i in range(8) if (word >> i) & 1]
        stimulus += [(0, '%s%d' % (prefix, j)) for j in range(3) if (operand >> j) & 1]
        stimulus.append((3000, 'SR_LAUNCH' if direction == 'R' else 'SL_LAUNCH'))
        return self.simulation.run(stimulus)

    def test_ports(self):
        design = self.simulation.design
        expected = (['IN%d' % i for i in range(8)] + ['SLA%d' % j for j in range(3)] +
                    ['SL_LAUNCH', 'SRA0', 'SRA1', 'SRA2', 'SR_LAUNCH'])
        self.assertEqual(design.inputs, tuple(sorted(expected)))

    def test_right_shift_by_three(self):
        trace = self.operate(0b1, encode_shift_amount(3, 3), 'R')
        self.assertEqual(trace.final_levels(), {'O3': 1})
        self.assertEqual(trace.diagnostics, [])

    def test_left_shift_by_zero(self):
        self.assertEqual(self.operate(0b10000000, 7, 'L').final_levels(), {'O7': 1})

    def test_identity(self):
        trace = self.operate(0b10110101, 7, 'R')
        self.assertEqual(trace.final_levels(), dict(('O%d' % i, 1) for i in (0, 2, 4, 5, 7)))

    def test_generators_reset(self):
        trace = self.operate(0b11, 2, 'L')
        self.assertTrue(all(state.stored_bit == 0 for state in trace.final_states.values()))

    def test_other_widths_are_clean(self):
        for width in (2, 4, 5, 16):
            self.assertEqual(errors(check_design(build_shifter(ShifterConfig(width=width)))), [])
