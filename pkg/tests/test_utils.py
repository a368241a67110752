from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from pulseflow import utils


class SettingTest(SimpleTestCase):
    def test_get_setting(self):
        value = utils.setting('SECRET_KEY')
        self.assertEqual(settings.SECRET_KEY, value)

    def test_setting_unfound(self):
        self.assertIsNone(utils.setting('FOO'))
        self.assertEqual(utils.setting('FOO', 'bar'), 'bar')
        with self.assertRaises(ImproperlyConfigured):
            utils.setting('FOO', strict=True)


class PinTest(SimpleTestCase):
    def test_split_pin(self):
        self.assertEqual(utils.split_pin('reg_d3_0.O1'), ('reg_d3_0', 'O1'))

    def test_split_pin_uses_last_dot(self):
        self.assertEqual(utils.split_pin('a.b.OUT'), ('a.b', 'OUT'))

    def test_split_bare_name(self):
        """
        Bare names are external ports
        """
        self.assertEqual(utils.split_pin('IN0'), ('IN0', None))
        self.assertEqual(utils.split_pin('x.'), ('x.', None))

    def test_join_pin(self):
        self.assertEqual(utils.join_pin('sr_ff2', 'INVERTED'), 'sr_ff2.INVERTED')

    def test_valid_names(self):
        self.assertTrue(utils.is_valid_name('reg_load3'))
        self.assertTrue(utils.is_valid_name('a-b.c'))
        self.assertFalse(utils.is_valid_name('bad name'))
        self.assertFalse(utils.is_valid_name(''))


class WordTest(SimpleTestCase):
    def test_word_bits(self):
        self.assertEqual(utils.word_bits(0b10110, 8), [1, 2, 4])
        self.assertEqual(utils.word_bits(0, 8), [])

    def test_word_bits_ignores_high_bits(self):
        self.assertEqual(utils.word_bits(0b100000001, 8), [0])

    def test_format_word(self):
        self.assertEqual(utils.format_word(5, 8), '00000101')
