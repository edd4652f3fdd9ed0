"""Configuration loading, schema validation, helpers, logging and console output."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from rotcam_slam.utility import config as config_module
from rotcam_slam.utility.config import (
    ExperimentConfig,
    load_config,
    parse_override,
    read_config_file,
    set_dotted,
)
from rotcam_slam.utility.console import OutputFormat, OutputManager, init_output_manager, reset_output_manager
from rotcam_slam.utility.exceptions import (
    EXIT_CONFIG,
    EXIT_ENVIRONMENT,
    EXIT_TRIAL,
    ConfigError,
    EnvironmentFileError,
    InvalidInputError,
    InvalidParameterError,
    StartPoseError,
    TrialFailedError,
    ValidationError,
)
from rotcam_slam.utility.logging_config import (
    Subject,
    get_sim_logger,
    init_logging,
    release_trial_loggers,
    set_sim_time,
)
from rotcam_slam.utility.pure import format_float, mean_std, require_finite, require_positive_dt, symmetrize, wrap_angle
from rotcam_slam.utility.validation import check, validation_errors

EXAMPLE_CONFIG = Path(__file__).resolve().parents[2] / 'configs' / 'experiment.yaml'


@pytest.fixture
def no_ci(monkeypatch):
    for name in ('GITHUB_ACTIONS', 'GITLAB_CI', 'CI'):
        monkeypatch.delenv(name, raising=False)
    yield
    reset_output_manager()


class TestExperimentConfig:
    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({})
        assert (cfg.mode, cfg.merged, cfg.duration, cfg.trials) == ('A', True, 600.0, 20)
        assert cfg.ctrl.horizon_steps == 20
        assert cfg.batch.modes == ('A', 'HH', 'OC', 'Y0')

    def test_sections(self):
        cfg = ExperimentConfig.from_dict({
            'mode': 'HH', 'merged': False,
            'sensors': {'tick_deg': 1.0},
            'camera': {'fov_deg': 90},
            'kin': {'D': 0.14},
        })
        assert cfg.label == 'HH_NC'
        assert cfg.sensors.tick_size == pytest.approx(math.radians(1.0))
        assert cfg.camera.fov == pytest.approx(math.pi / 2)
        assert cfg.kin.D == 0.14

    @pytest.mark.parametrize('data', [{'mode': 'Z'}, {'duration': 0}, {'trials': 0}])
    def test_invalid(self, data):
        with pytest.raises(InvalidParameterError):
            ExperimentConfig.from_dict(data)

    def test_garbage_number(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({'duration': 'long'})


class TestConfigFiles:
    def test_dotted_keys_expand(self, tmp_path):
        path = tmp_path / 'exp.yaml'
        path.write_text('mode: HH\nkin.D: 0.14\nctrl:\n  v_max: 0.5\n')
        assert read_config_file(path) == {'mode': 'HH', 'kin': {'D': 0.14}, 'ctrl': {'v_max': 0.5}}

    def test_empty_file(self, tmp_path):
        path = tmp_path / 'empty.yaml'
        path.write_text('')
        assert read_config_file(path) == {}

    @pytest.mark.parametrize('text', ['- a\n- b\n', 'mode: [A, B\n'])
    def test_bad_files(self, tmp_path, text):
        path = tmp_path / 'bad.yaml'
        path.write_text(text)
        with pytest.raises(ConfigError):
            read_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            read_config_file(tmp_path / 'nope.yaml')

    def test_precedence(self, tmp_path):
        path = tmp_path / 'exp.yaml'
        path.write_text('mode: A\nduration: 10\nseed: 3\n')
        data = load_config(path, ['mode=HH', 'ctrl.v_max=0.5'], {'mode': 'OC', 'seed': None})
        assert data['mode'] == 'OC'
        assert data['seed'] == 3
        assert data['ctrl'] == {'v_max': 0.5}

    def test_example_config_is_valid(self):
        data = read_config_file(EXAMPLE_CONFIG)
        check(data)
        ExperimentConfig.from_dict(data)


class TestOverrides:
    @pytest.mark.parametrize('item,expected', [
        ('kin.D=0.14', ('kin.D', 0.14)),
        ('mode=HH', ('mode', 'HH')),
        ('merged=false', ('merged', False)),
        ('batch.modes=[A, OC]', ('batch.modes', ['A', 'OC'])),
        ('seed=', ('seed', None)),
    ])
    def test_parse(self, item, expected):
        assert parse_override(item) == expected

    @pytest.mark.parametrize('item', ['mode', '=3'])
    def test_malformed(self, item):
        with pytest.raises(ConfigError):
            parse_override(item)

    def test_set_into_scalar(self):
        with pytest.raises(ConfigError):
            set_dotted({'mode': 'A'}, 'mode.x', 1)

    def test_merge_sections(self):
        data = {'ctrl': {'v_max': 1.0, 'w_p': 2.0}}
        set_dotted(data, 'ctrl', {'v_max': 0.5})
        assert data == {'ctrl': {'v_max': 0.5, 'w_p': 2.0}}


class TestValidation:
    def test_valid(self):
        check({'mode': 'HH', 'ctrl': {'v_max': 0.5}, 'batch': {'merged': [True]}})

    def test_every_error_is_reported(self):
        messages = validation_errors({'mode': 'Z', 'ctrl': {'v_max': -1}, 'foo': 1})
        assert len(messages) == 3
        assert messages[0].startswith('<root>:')
        assert messages[1].startswith('ctrl.v_max:')
        assert messages[2].startswith('mode:')

    def test_check_raises_config_error(self):
        with pytest.raises(ValidationError) as info:
            check({'slam': {'loop_overlap': 2}})
        assert isinstance(info.value, ConfigError)
        assert info.value.exit_code == EXIT_CONFIG


class TestExceptions:
    def test_exit_codes(self):
        assert StartPoseError.exit_code == EXIT_ENVIRONMENT
        assert StartPoseError.code == 'ENV_START_BLOCKED'
        assert issubclass(StartPoseError, EnvironmentFileError)
        assert TrialFailedError.exit_code == EXIT_TRIAL


class TestPure:
    def test_wrap_angle(self):
        assert wrap_angle(math.pi) == math.pi
        assert wrap_angle(-math.pi) == math.pi
        assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
        assert wrap_angle(np.array([0.0, 2 * math.pi + 0.5])) == pytest.approx([0.0, 0.5])

    def test_require_finite(self):
        require_finite('x', 1.0, [2.0, 3.0])
        with pytest.raises(InvalidInputError):
            require_finite('x', 1.0, [math.inf])

    @pytest.mark.parametrize('dt', [0.0, -1.0, math.nan])
    def test_require_positive_dt(self, dt):
        with pytest.raises(InvalidInputError):
            require_positive_dt(dt)

    def test_symmetrize(self):
        assert symmetrize(np.array([[1.0, 2.0], [0.0, 1.0]])).tolist() == [[1.0, 1.0], [1.0, 1.0]]

    def test_format_float(self):
        assert format_float(None) == ''
        assert format_float(math.nan) == ''
        assert format_float(0.1) == '0.1'
        assert format_float(1.0 / 3.0) == '0.3333333333'
        assert format_float(2.0) == '2'

    def test_mean_std(self):
        mean, std = mean_std([])
        assert math.isnan(mean) and math.isnan(std)
        assert mean_std([2.0]) == (2.0, 0.0)
        assert mean_std([1.0, 2.0, 3.0]) == (2.0, 1.0)
        mean, std = mean_std(v for v in (1.0, 3.0))
        assert mean == 2.0
        assert std == pytest.approx(math.sqrt(2.0))


class TestLogging:
    def test_loggers_are_cached_per_trial(self):
        assert get_sim_logger(Subject.SLAM, 'A#1') is get_sim_logger('slam', 'A#1')
        assert get_sim_logger(Subject.SLAM, 'A#1') is not get_sim_logger(Subject.SLAM, 'A#2')

    def test_json_file_records_subject_and_trial(self, tmp_path):
        log_file = tmp_path / 'trial.log'
        init_logging(log_file=str(log_file), json_logging=True, console_output=False)
        get_sim_logger(Subject.SLAM, 'HH#1').warning('Loop closure 3 -> 40')
        record = json.loads(log_file.read_text().splitlines()[-1])
        assert record['subject'] == 'SLAM'
        assert record['trial'] == 'HH#1'
        assert record['message'] == 'Loop closure 3 -> 40'
        assert record['level'] == 'WARNING'
        assert record['sim_time'] is None

    def test_records_carry_the_trial_clock(self, tmp_path):
        log_file = tmp_path / 'trial.log'
        init_logging(log_file=str(log_file), console_output=False)
        set_sim_time('OC#2', 41.3)
        get_sim_logger(Subject.CONTROL, 'OC#2').warning('Controller fault: infeasible')
        get_sim_logger(Subject.CONTROL, 'OC#3').warning('other trial')
        first, second = log_file.read_text().splitlines()
        assert first.endswith('WARNING [CONTROL OC#2 t=41.3s] Controller fault: infeasible')
        assert second.endswith('WARNING [CONTROL OC#3] other trial')

    def test_finished_trial_loggers_are_released(self):
        finished = get_sim_logger(Subject.SLAM, 'HH#9')
        get_sim_logger(Subject.CONTROL, 'HH#9')
        running = get_sim_logger(Subject.SLAM, 'HH#10')
        set_sim_time('HH#9', 3.0)
        release_trial_loggers('HH#9')
        fresh = get_sim_logger(Subject.SLAM, 'HH#9')
        assert fresh is not finished
        assert get_sim_logger(Subject.SLAM, 'HH#10') is running
        assert fresh.process('msg', {})[1]['extra']['sim_time'] is None


class TestConsole:
    def test_ci_lines(self, capsys, no_ci):
        manager = OutputManager(OutputFormat.CI)
        manager.step('Running trial A#0', 'trial')
        manager.success('Trial finished', steps=10)
        out = capsys.readouterr().out
        assert '[TRIAL] Running trial A#0' in out
        assert '[SUCCESS] Trial finished (steps: 10' in out

    def test_json_events(self, capsys, no_ci):
        manager = OutputManager(OutputFormat.JSON)
        manager.info('hello')
        event = json.loads(capsys.readouterr().out.strip())
        assert event['event'] == 'info'
        assert event['message'] == 'hello'

    def test_quiet_keeps_errors(self, capsys, no_ci):
        manager = OutputManager(OutputFormat.QUIET)
        manager.info('hidden')
        manager.warning('hidden')
        manager.error('broken')
        captured = capsys.readouterr()
        assert 'hidden' not in captured.out + captured.err
        assert '[ERROR] broken' in captured.err

    def test_summary_table_in_ci(self, capsys, no_ci):
        OutputManager(OutputFormat.CI).summary_table('Summary', ['label', 'bac'], [['A', 0.7]])
        assert 'label\tbac\nA\t0.7' in capsys.readouterr().out

    def test_unknown_format_falls_back(self, no_ci):
        assert init_output_manager('bogus').format == OutputFormat.INTERACTIVE

    def test_ci_environment_switches_format(self, monkeypatch, no_ci):
        monkeypatch.setenv('CI', '1')
        assert init_output_manager('interactive').format == OutputFormat.CI

    def test_progress_is_a_no_op_outside_interactive(self, no_ci):
        with OutputManager(OutputFormat.CI).batch_progress(3) as advance:
            advance('A#0')


def test_modes_constant_matches_schema():
    from rotcam_slam.utility.validation import schema

    assert tuple(schema['properties']['mode']['enum']) == config_module.MODES
