import json
import logging

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError
from django.core.serializers.json import DjangoJSONEncoder

from pulseflow.circuits import ShifterConfig, build_shifter
from pulseflow.harness import (
    exhaustive_sweep, margin_sweep, random_words, run_program, staircase_pattern,
)
from pulseflow.kernel import Simulation, SimulationError, parse_stimulus
from pulseflow.netlist import NetlistError, check_design, errors, parse_design, print_design
from pulseflow.waveform import export_vcd

logger = logging.getLogger('pulseflow')

VERBOSITY_LEVELS = {0: logging.ERROR, 1: logging.WARNING, 2: logging.INFO, 3: logging.DEBUG}


def picoseconds(value):
    return int(round(float(value) * 1000))


class Command(BaseCommand):
    help = 'Build, check and simulate SFQ binary shifter netlists.'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='subcommand', title='subcommands')
        subparsers.required = True

        gen = subparsers.add_parser('gen', help='Emit the netlist of a generated shifter.')
        self._add_shifter_arguments(gen)
        gen.add_argument('--out', help='Write the netlist here instead of stdout.')

        check = subparsers.add_parser('check', help='Run the design-rule check on a netlist.')
        check.add_argument('netlist')

        sim = subparsers.add_parser('sim', help='Simulate a netlist with a stimulus file.')
        sim.add_argument('netlist')
        sim.add_argument('--stimulus', required=True, help='Lines of "<time_fs> <input>".')
        sim.add_argument('--vcd')
        sim.add_argument('--report')

        staircase = subparsers.add_parser('staircase', help='Run the staircase pattern.')
        self._add_shifter_arguments(staircase)
        staircase.add_argument('--vcd')
        staircase.add_argument('--report')

        exhaustive = subparsers.add_parser('exhaustive', help='Compare every operation with the golden model.')
        self._add_shifter_arguments(exhaustive)
        exhaustive.add_argument('--fail-cell', action='append', default=[], dest='fail_cells',
                                help='Mark a cell faulty; may be repeated.')
        exhaustive.add_argument('--jobs', type=int, default=1)
        exhaustive.add_argument('--sample', type=int, help='Sweep this many seeded random words.')
        exhaustive.add_argument('--seed', type=int, default=0)
        exhaustive.add_argument('--report')

        margins = subparsers.add_parser('margins', help='Re-run patterns under perturbed cell delays.')
        self._add_shifter_arguments(margins)
        margins.add_argument('--perturb-pct', type=float, default=20.0)
        margins.add_argument('--trials', type=int, default=10)
        margins.add_argument('--seed', type=int, default=0)
        margins.add_argument('--words', type=int, default=16, help='Random words per trial.')
        margins.add_argument('--report')

    def _add_shifter_arguments(self, parser):
        parser.add_argument('--width', type=int)
        parser.add_argument('--bits', type=int)
        parser.add_argument('--loop-delay-ps', type=picoseconds, dest='loop_delay_fs')
        parser.add_argument('--skew-ps', type=picoseconds, dest='clock_skew_fs')
        parser.add_argument('--clock-flow', choices=('counter', 'co'))

    def handle(self, *args, **options):
        logger.setLevel(VERBOSITY_LEVELS.get(options['verbosity'], logging.DEBUG))
        handler = getattr(self, 'handle_%s' % options['subcommand'])
        try:
            handler(options)
        except ImproperlyConfigured as e:
            raise CommandError(str(e), returncode=2)
        except NetlistError as e:
            for diagnostic in e.diagnostics:
                self.stderr.write(str(diagnostic))
            raise CommandError('netlist has %d error(s)' % len(errors(e.diagnostics)), returncode=1)

    def _config(self, options):
        return ShifterConfig(width=options['width'], bits=options['bits'],
                             loop_delay_fs=options['loop_delay_fs'],
                             clock_skew_fs=options['clock_skew_fs'],
                             clock_flow=options['clock_flow'])

    def _read(self, path):
        try:
            with open(path, encoding='utf-8') as f:
                return f.read()
        except (IOError, OSError, UnicodeDecodeError) as e:
            raise CommandError('cannot read %s: %s' % (path, e), returncode=2)

    def _write(self, path, text):
        if path is None:
            self.stdout.write(text, ending='')
            return
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info('wrote %s', path)

    def _write_json(self, path, data):
        self._write(path, json.dumps(data, cls=DjangoJSONEncoder, indent=2, sort_keys=True) + '\n')

    def _finish(self, report):
        summary = report['summary']
        if not summary['passed']:
            raise CommandError('%d of %d operations failed'
                               % (summary['mismatches'], summary['operations']), returncode=1)

    def handle_gen(self, options):
        self._write(options['out'], print_design(build_shifter(self._config(options))))

    def handle_check(self, options):
        diagnostics = check_design(parse_design(self._read(options['netlist'])))
        for diagnostic in diagnostics:
            self.stdout.write(str(diagnostic))
        problems = errors(diagnostics)
        if problems:
            raise CommandError('%d design-rule error(s)' % len(problems), returncode=1)
        self.stdout.write('%s: no design-rule errors' % options['netlist'])

    def handle_sim(self, options):
        design = parse_design(self._read(options['netlist']))
        try:
            stimulus = parse_stimulus(self._read(options['stimulus']))
            trace = Simulation(design).run(stimulus)
        except (ValueError, SimulationError) as e:
            raise CommandError(str(e), returncode=1)
        if options['vcd']:
            self._write(options['vcd'], export_vcd(trace, design))
        pulses = {}
        for record in trace.records:
            pulses.setdefault(record.net, []).append(record.time)
        report = {
            'pulses': pulses,
            'levels': [{'time': c.time, 'output': c.port, 'level': c.level} for c in trace.levels],
            'final_levels': trace.final_levels(),
            'diagnostics': ['%d %s %s: %s' % note for note in trace.diagnostics],
            'summary': {
                'delivered': trace.delivered,
                'diagnostics': len(trace.diagnostics),
                'passed': not trace.diagnostics,
            },
        }
        self._write_json(options['report'], report)
        if trace.diagnostics:
            raise CommandError('%d cell diagnostic(s)' % len(trace.diagnostics), returncode=1)

    def handle_staircase(self, options):
        config = self._config(options)
        design = build_shifter(config)
        report = run_program(design, staircase_pattern(config.width), config)
        if options['vcd']:
            self._write(options['vcd'], export_vcd(report.trace, design))
        data = report.to_dict()
        self._write_json(options['report'], data)
        self._finish(data)

    def handle_exhaustive(self, options):
        config = self._config(options)
        if config.width > 16:
            raise CommandError('exhaustive sweeps are limited to 16 bits', returncode=2)
        words = None
        if options['sample']:
            words = random_words(config.width, options['sample'], options['seed'])
        elif config.width > 12:
            raise CommandError('use --sample for widths above 12 bits', returncode=2)
        try:
            report = exhaustive_sweep(config, words=words, fail_cells=options['fail_cells'],
                                      jobs=options['jobs'])
        except KeyError as e:
            raise CommandError(e.args[0], returncode=2)
        data = report.to_dict()
        self._write_json(options['report'], data)
        self._finish(data)

    def handle_margins(self, options):
        config = self._config(options)
        trials = margin_sweep(config, perturb_pct=options['perturb_pct'], trials=options['trials'],
                              seed=options['seed'], words_per_trial=options['words'])
        data = {
            'perturb_pct': options['perturb_pct'],
            'seed': options['seed'],
            'trials': [trial._asdict() for trial in trials],
            'summary': {
                'operations': sum(trial.operations for trial in trials),
                'mismatches': sum(trial.mismatches for trial in trials),
                'passed': all(trial.passed for trial in trials if trial.settling_holds),
            },
        }
        self._write_json(options['report'], data)
        self._finish(data)
