import os
import numpy as np
import pandas as pd
import pytest
from config import Config
from harness.checks import check_schedule, cli_check
from harness.experiment_config import ExperimentConfig, parse_assignments
from harness.problems import build_problem
from harness.runner import cli_run, run_experiment, trial_path
from harness.sweep import cli_sweep, grid_points, sweep_rows
from utils.errors import ConfigurationError
import main as cli


def config_path(name):
    return os.path.join(Config.CONFIG_DIR, f"{name}.json")


@pytest.fixture
def cycling_cfg():
    return ExperimentConfig.load(config_path('cycling_vs_iid'))


def _files(root):
    out = {}
    for folder, _, names in os.walk(root):
        for name in names:
            path = os.path.join(folder, name)
            with open(path, 'rb') as handle:
                out[os.path.relpath(path, root)] = handle.read()
    return out


def test_shipped_configs_load():
    for name in ('cycling_vs_iid', 'regression_sweep', 'adam_dichotomy', 'truncation_dichotomy',
                 'rnn_stability', 'uoro_rnn'):
        cfg = ExperimentConfig.load(config_path(name))
        for arm in cfg.arm_names():
            build_problem(cfg.for_arm(arm), cfg.seeds[0])


def test_config_round_trip(tmp_path, cycling_cfg):
    path = cycling_cfg.save(str(tmp_path / 'cfg.json'))
    assert ExperimentConfig.load(path) == cycling_cfg
    assert ExperimentConfig.from_dict(cycling_cfg.to_dict()) == cycling_cfg


def test_config_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({'name': 'x', 'system': {'kind': 'linear'}, 'learning_rate': 0.1})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({'name': 'x', 'system': {}})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({'name': 'x', 'system': {'kind': 'linear'}, 'algorithm': 'lbfgs'})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({'name': 'x', 'system': {'kind': 'linear'}, 'schedule': {'gamma': 0.1}})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({'name': 'x', 'system': {'kind': 'linear'}, 'arms': [{'sampling': 'iid'}]})
    (tmp_path / 'broken.json').write_text('{"name": ')
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(str(tmp_path / 'broken.json'))
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(str(tmp_path / 'missing.json'))


def test_dotted_overrides(cycling_cfg):
    cfg = cycling_cfg.with_overrides({'schedule.b': 0.5, 'system.params.N': 32, 'horizon': 10})
    assert cfg.schedule == {'gamma': 0.1, 'b': 0.5}
    assert cfg.system['params']['N'] == 32
    assert cfg.horizon == 10
    assert cycling_cfg.schedule['b'] == 0.7
    with pytest.raises(ConfigurationError):
        cycling_cfg.override('horizon.value', 3)


def test_arms(cycling_cfg):
    assert cycling_cfg.arm_names() == ['cycling', 'iid']
    iid = cycling_cfg.for_arm('iid')
    assert iid.sampling == 'iid'
    assert iid.arms == [] and iid.arm_names() == ['sgd']
    with pytest.raises(ConfigurationError):
        cycling_cfg.for_arm('reshuffle')

    adam = ExperimentConfig.load(config_path('adam_dichotomy'))
    fixed = adam.for_arm('fixed_beta2')
    assert fixed.rule_options == {'beta1': 0.0, 'c': 0.02, 'timing': 'psi_first', 'fixed_beta': 0.99}
    assert 'fixed_beta' not in adam.for_arm('adaptive_beta2').rule_options


def test_config_hash():
    cfg = ExperimentConfig.load(config_path('uoro_rnn'))
    hashes = {cfg.for_arm(arm).config_hash(0) for arm in cfg.arm_names()}
    assert len(hashes) == 1
    digest = hashes.pop()
    assert len(digest) == 64
    assert cfg.config_hash(1) != digest
    assert cfg.override('horizon', 10).config_hash(0) != digest


def test_parse_assignments():
    assert parse_assignments(['schedule.b=0.5', 'sampling=iid', 'arms=[]', 'force=true']) == {
        'schedule.b': 0.5, 'sampling': 'iid', 'arms': [], 'force': True}
    assert parse_assignments(None) == {}
    with pytest.raises(ConfigurationError):
        parse_assignments(['horizon'])


def test_grid_points():
    assert grid_points({'a': [1, 2], 'b': ['x']}) == [{'a': 1, 'b': 'x'}, {'a': 2, 'b': 'x'}]
    with pytest.raises(ConfigurationError):
        grid_points({'a': []})


def test_cli_run_writes_trials_and_summary(tmp_path, capsys):
    root = str(tmp_path / 'first')
    assert cli_run(config_path('cycling_vs_iid'), {'horizon': 200}, output=root) == 0
    files = _files(root)
    trial_files = [name for name in files if not name.endswith('summary.csv')]
    assert len(trial_files) == 16
    assert os.path.join('cycling_vs_iid', 'summary.csv') in files
    assert 'Wrote 16 trials' in capsys.readouterr().out

    summary = pd.read_csv(os.path.join(root, 'cycling_vs_iid', 'summary.csv'))
    assert list(summary.columns) == ['arm', 'seed', 'converged', 'final_dist', 'abort_t']
    for _, row in summary.iterrows():
        trial = pd.read_csv(trial_path(root, 'cycling_vs_iid', row['arm'], row['seed']))
        assert list(trial.columns) == ['t', 'theta_dist', 'loss', 'grad_norm', 'aborted']
        assert len(trial) == 201
        assert trial['theta_dist'].iloc[-1] == pytest.approx(row['final_dist'], rel=1e-12)


def test_cli_run_is_reproducible(tmp_path):
    first, second, parallel = (str(tmp_path / name) for name in ('first', 'second', 'parallel'))
    assert cli_run(config_path('cycling_vs_iid'), {'horizon': 200}, output=first) == 0
    assert cli_run(config_path('cycling_vs_iid'), {'horizon': 200}, output=second) == 0
    assert cli_run(config_path('cycling_vs_iid'), {'horizon': 200}, jobs=2, output=parallel) == 0
    assert _files(first) == _files(second)
    assert _files(first) == _files(parallel)


def test_cli_run_rejects_invalid_exponents(tmp_path, capsys):
    overrides = {'exponents': {'a': 0.0, 'gamma': 0.5}, 'horizon': 20}
    assert cli_run(config_path('rnn_stability'), overrides, output=str(tmp_path)) == 2
    out = capsys.readouterr().out
    assert 'invalid exponents' in out
    assert 'must be < b = 0.7' in out
    assert not os.path.exists(os.path.join(str(tmp_path), 'rnn_stability'))
    assert cli_run(config_path('rnn_stability'), overrides, force=True, output=str(tmp_path)) == 0


def test_run_experiment_without_output(cycling_cfg):
    summary = run_experiment(cycling_cfg.override('horizon', 50), None, seeds=[0])
    assert list(summary['arm']) == ['cycling', 'iid']
    assert summary['abort_t'].isna().all()


def test_diverging_trial_is_recorded_as_abort(tmp_path):
    cfg = ExperimentConfig.load(config_path('cycling_vs_iid')).with_overrides(
        {'schedule.gamma': 50.0, 'schedule.b': 0.1, 'horizon': 500, 'arms': []})
    summary = run_experiment(cfg, str(tmp_path), seeds=[0])
    assert summary['abort_t'].notna().all()
    assert not summary['converged'].any()
    trial = pd.read_csv(trial_path(str(tmp_path), cfg.name, 'sgd', 0))
    assert trial['aborted'].iloc[-1] == 1


def test_check_schedule():
    assert check_schedule('exact', 0.0, 0.0, 0.7)[0]
    valid, lines = check_schedule('exact', 0.0, 0.5, 0.7)
    assert not valid and any('violated' in line for line in lines)
    assert check_schedule(h=8.0, b=0.8)[0]
    assert not check_schedule(h=2.0)[0]
    with pytest.raises(ConfigurationError):
        check_schedule('exact')
    with pytest.raises(ConfigurationError):
        check_schedule('newton', b=0.5)


def test_cli_check_schedule_exit_codes(capsys):
    assert cli_check('schedule', {'algorithm_class': 'exact', 'b': 0.7}) == 0
    assert cli_check('schedule', {'algorithm_class': 'imperfect', 'gamma': 0.1, 'b': 0.7}) == 1
    assert cli_check('schedule', {'algorithm_class': 'tbptt', 'b': 0.7, 'A': 0.4}) == 0
    assert cli_check('schedule', {}) == 2
    assert cli_check('lyapunov', {}) == 2
    assert 'error:' in capsys.readouterr().out


def test_cli_check_unbiased(tmp_path, capsys):
    output = str(tmp_path / 'unbiased.csv')
    assert cli_check('unbiased', {'dim': 2, 'p': 3, 'steps': 2, 'seed': 0, 'reducer': 'nobacktrack',
                                  'output': output}) == 0
    assert 'passed: True' in capsys.readouterr().out
    assert len(pd.read_csv(output)) == 1


def test_cli_check_stability(capsys):
    assert cli_check('stability', {'config': config_path('rnn_stability')}) == 0
    assert 'k: 1' in capsys.readouterr().out.splitlines()


def test_cli_check_optimum(capsys):
    options = {'config': config_path('regression_sweep'), 'T': 1600, 'epoch': 16}
    assert cli_check('optimum', options) == 0
    assert 'passed: True' in capsys.readouterr().out
    assert cli_check('optimum', {'config': config_path('no_such_experiment')}) == 2


def test_sweep_rows_over_grid():
    cfg = ExperimentConfig.load(config_path('regression_sweep')).with_overrides({'horizon': 200, 'seeds': [0, 1]})
    frame = sweep_rows(cfg)
    assert len(frame) == 8
    assert (frame['error'] == '').all()
    assert set(frame['sampling']) == {'cycling', 'iid'}
    assert (frame['n_seeds'] == 2).all()


def test_sweep_records_failing_points():
    cfg = ExperimentConfig.load(config_path('regression_sweep')).with_overrides(
        {'horizon': 100, 'seeds': [0], 'grid': {'schedule.b': [0.5, 1.5]}})
    frame = sweep_rows(cfg)
    assert len(frame) == 2
    assert frame['error'].iloc[0] == ''
    assert 'b must lie in (0, 1]' in frame['error'].iloc[1]
    assert frame['n_seeds'].iloc[1] == 0


def test_sweep_over_arms():
    cfg = ExperimentConfig.load(config_path('adam_dichotomy')).with_overrides({'horizon': 400, 'seeds': [0]})
    frame = sweep_rows(cfg)
    assert list(frame['arm']) == ['adaptive_beta2', 'fixed_beta2']
    assert (frame['error'] == '').all()


def test_truncation_grid_needs_force(tmp_path):
    path = config_path('truncation_dichotomy')
    grid = {'trunc.A': [0.2, 0.4, 0.8]}
    overrides = {'horizon': 300}
    assert cli_sweep(path, overrides, grid, output=str(tmp_path / 'strict')) == 0
    strict = pd.read_csv(tmp_path / 'strict' / 'truncation_dichotomy' / 'sweep.csv', keep_default_na=False)
    assert list(strict['error'] != '') == [False, False, True]
    assert cli_sweep(path, overrides, grid, force=True, output=str(tmp_path / 'forced')) == 0
    forced = pd.read_csv(tmp_path / 'forced' / 'truncation_dichotomy' / 'sweep.csv', keep_default_na=False)
    assert len(forced) == 3
    assert (forced['error'] == '').all()


def test_main_entry_point(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(Config, 'OUTPUT_ROOT', str(tmp_path))
    monkeypatch.setattr(Config, 'LOG_DIR', str(tmp_path / 'logs'))
    assert cli.main(['check', 'schedule', '--b', '0.7']) == 0
    assert cli.main(['check', 'schedule', '--class', 'tbptt', '--b', '0.7', '--A', '0.9']) == 1
    assert cli.main(['check', 'stability']) == 2
    assert cli.main(['run', config_path('cycling_vs_iid'), '--set', 'horizon=50', '--seed', '3',
                     '--output', str(tmp_path)]) == 0
    assert os.path.exists(trial_path(str(tmp_path), 'cycling_vs_iid', 'iid', 3))
    assert cli.main(['run', config_path('cycling_vs_iid'), '--set', 'horizon']) == 2
    assert cli.main(['sweep', config_path('regression_sweep'), '--set', 'horizon=50', '--seed', '0',
                     '--grid', 'schedule.b=[0.5]', '--output', str(tmp_path)]) == 0
    assert len(pd.read_csv(tmp_path / 'regression_sweep' / 'sweep.csv')) == 1
    assert os.path.isdir(tmp_path / 'logs')
