from django.test import SimpleTestCase, override_settings

from pulseflow import cells
from pulseflow.cells import CellConfig, CellState, react, ring_feedback_count


class CellConfigTest(SimpleTestCase):
    def test_default_delay(self):
        self.assertEqual(CellConfig().delay_fs, 3000)
        self.assertFalse(CellConfig().faulty)

    @override_settings(PULSEFLOW_CELL_DELAY_FS=4500)
    def test_delay_from_settings(self):
        self.assertEqual(CellConfig().delay_fs, 4500)

    def test_explicit_delay_wins(self):
        with self.settings(PULSEFLOW_CELL_DELAY_FS=4500):
            self.assertEqual(CellConfig(1200).delay_fs, 1200)


class ReactTest(SimpleTestCase):
    def setUp(self):
        self.config = CellConfig(3000)
        self.state = CellState()

    def test_jtl(self):
        reaction = react(cells.JTL, self.state, self.config, 'IN', 100)
        self.assertEqual(reaction.pulses, [('OUT', 3100)])
        self.assertEqual(reaction.notes, [])

    def test_split(self):
        reaction = react(cells.SPLIT, self.state, self.config, 'IN', 0)
        self.assertEqual(reaction.pulses, [('OUT1', 3000), ('OUT2', 3000)])

    def test_merge_passes_each_input(self):
        a = react(cells.MERGE, self.state, self.config, 'A', 10)
        b = react(cells.MERGE, self.state, self.config, 'B', 10)
        self.assertEqual(a.pulses, [('OUT', 3010)])
        self.assertEqual(b.pulses, [('OUT', 3010)])

    def test_sink(self):
        self.assertEqual(react(cells.SINK, self.state, self.config, 'IN', 5).pulses, [])

    def test_dro_read_empty(self):
        self.assertEqual(react(cells.DRO, self.state, self.config, 'IN', 0).pulses, [])

    def test_dro_set_then_read(self):
        react(cells.DRO, self.state, self.config, 'SET', 0)
        self.assertEqual(self.state.stored_bit, 1)
        reaction = react(cells.DRO, self.state, self.config, 'IN', 5000)
        self.assertEqual(reaction.pulses, [('OUT', 8000)])
        self.assertEqual(self.state.stored_bit, 0)

    def test_dro_read_is_destructive(self):
        react(cells.DRO, self.state, self.config, 'SET', 0)
        react(cells.DRO, self.state, self.config, 'IN', 5000)
        self.assertEqual(react(cells.DRO, self.state, self.config, 'IN', 9000).pulses, [])

    def test_d3_routes_each_read_port(self):
        for port, out in (('IN1', 'O1'), ('IN2', 'O2'), ('IN3', 'O3')):
            state = CellState()
            react(cells.D3, state, self.config, 'SET', 0)
            reaction = react(cells.D3, state, self.config, port, 1000)
            self.assertEqual(reaction.pulses, [(out, 4000)])
            self.assertEqual(state.stored_bit, 0)

    def test_double_set_is_idempotent(self):
        react(cells.D3, self.state, self.config, 'SET', 0)
        reaction = react(cells.D3, self.state, self.config, 'SET', 100)
        self.assertEqual(self.state.stored_bit, 1)
        self.assertEqual([code for code, _ in reaction.notes], [cells.DOUBLE_SET])

    def test_simultaneous_set_and_read(self):
        react(cells.D3, self.state, self.config, 'IN1', 500)
        reaction = react(cells.D3, self.state, self.config, 'SET', 500)
        self.assertEqual([code for code, _ in reaction.notes], [cells.TIMING_VIOLATION])
        self.assertEqual(self.state.stored_bit, 1)

    def test_collision_names_the_read_port(self):
        react(cells.D3, self.state, self.config, 'IN3', 500)
        late_set = react(cells.D3, self.state, self.config, 'SET', 500)
        self.assertEqual(late_set.notes[0][1], 'SET and IN3 arrived together at 500 fs')

        state = CellState()
        react(cells.D3, state, self.config, 'SET', 700)
        late_read = react(cells.D3, state, self.config, 'IN2', 700)
        self.assertEqual(late_read.notes[0][1], 'SET and IN2 arrived together at 700 fs')

    def test_rtff_toggle(self):
        direct = react(cells.RTFF, self.state, self.config, 'T', 0)
        self.assertEqual(direct.pulses, [('DIRECT', 3000)])
        self.assertEqual(self.state.stored_bit, 1)
        carry = react(cells.RTFF, self.state, self.config, 'T', 30000)
        self.assertEqual(carry.pulses, [('INVERTED', 33000)])
        self.assertEqual(self.state.stored_bit, 0)

    def test_rtff_preset(self):
        react(cells.RTFF, self.state, self.config, 'SET', 0)
        reaction = react(cells.RTFF, self.state, self.config, 'T', 10)
        self.assertEqual(reaction.pulses, [('INVERTED', 3010)])

    def test_sfqdc_toggles_level(self):
        first = react(cells.SFQDC, self.state, self.config, 'IN', 0)
        second = react(cells.SFQDC, self.state, self.config, 'IN', 10000)
        self.assertEqual(first.level, (3000, 1))
        self.assertEqual(second.level, (13000, 0))
        self.assertEqual(first.pulses, [])

    def test_unknown_port(self):
        with self.assertRaises(cells.UnknownPort):
            react(cells.D3, self.state, self.config, 'IN4', 0)
        with self.assertRaises(KeyError):
            react(cells.JTL, self.state, self.config, 'A', 0)

    def test_unknown_kind(self):
        with self.assertRaises(cells.UnknownPort):
            react('NAND', self.state, self.config, 'IN', 0)

    def test_faulty_cell_absorbs(self):
        config = CellConfig(3000, faulty=True)
        react(cells.D3, self.state, config, 'SET', 0)
        self.assertEqual(self.state.stored_bit, 0)
        self.assertEqual(react(cells.JTL, self.state, config, 'IN', 0).pulses, [])
        with self.assertRaises(cells.UnknownPort):
            react(cells.JTL, self.state, config, 'B', 0)


class RingFeedbackTest(SimpleTestCase):
    def test_three_bit_pulse_count_law(self):
        for operand in range(8):
            feedback, final = ring_feedback_count(3, operand)
            self.assertEqual(feedback, 7 - operand)
            self.assertEqual(final, (0, 0, 0))

    def test_other_widths(self):
        for bits in (1, 2, 4):
            for operand in range(2 ** bits):
                self.assertEqual(ring_feedback_count(bits, operand)[0], 2 ** bits - 1 - operand)

    def test_operand_out_of_range(self):
        with self.assertRaises(ValueError):
            ring_feedback_count(3, 8)
        with self.assertRaises(ValueError):
            ring_feedback_count(3, -1)
