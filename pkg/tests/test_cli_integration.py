import csv
import json
import pathlib
import time

import pytest

from cli import EXIT_INPUT, EXIT_OK, main

SAMPLE_DIR = pathlib.Path(__file__).resolve().parents[1] / 'data' / 'sample'
SMALL = ['--set', 'train.epochs=1', '--set', 'train.channels=[[1,4,8],[8,4,8]]', '--set', 'train.batch_size=64']


@pytest.fixture(scope='module')
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp('synth')
    assert main(['synth', '--out', str(out), '--n', '4', '--days', '5', '--seed', '1']) == EXIT_OK
    return out


@pytest.fixture(scope='module')
def trained(synth_dir):
    manifest = str(synth_dir / 'manifest.json')
    assert main(['train', '--manifest', manifest] + SMALL) == EXIT_OK
    return manifest


def read_rows(path):
    with open(path, newline='', encoding='utf-8') as fh:
        return list(csv.reader(fh))


def test_synth_writes_bundle(synth_dir):
    for name in ('speeds.csv', 'distances.csv', 'manifest.json'):
        assert (synth_dir / name).exists()
    assert json.loads((synth_dir / 'manifest.json').read_text(encoding='utf-8'))['preset'] == 'desk'


def test_build_graph(synth_dir, capsys):
    assert main(['build-graph', '--manifest', str(synth_dir / 'manifest.json')]) == EXIT_OK
    summary = json.loads((synth_dir / 'out' / 'graph_summary.json').read_text(encoding='utf-8'))
    assert summary['n'] == 4
    assert 0.0 < summary['lambda_max'] <= 2.0 + 1e-9
    assert read_rows(synth_dir / 'out' / 'adjacency.csv')[0] == ['s1', 's2', 's3', 's4']
    assert 'Wrote adjacency' in capsys.readouterr().out


def test_train_writes_checkpoint_and_history(trained, synth_dir):
    out = synth_dir / 'out'
    assert (out / 'checkpoint.stgc').read_bytes()[:4] == b'STGC'
    rows = read_rows(out / 'history.csv')
    assert rows[0] == ['epoch', 'train_loss', 'val_mae', 'val_rmse', 'lr']
    assert len(rows) == 2
    assert float(rows[1][4]) == 1e-3


def test_training_is_reproducible(trained, synth_dir, capsys):
    assert main(['train', '--manifest', trained, '--set', 'output_dir=again'] + SMALL) == EXIT_OK
    assert 'Model parameters:' in capsys.readouterr().out
    for name in ('history.csv', 'checkpoint.stgc'):
        assert (synth_dir / 'again' / name).read_bytes() == (synth_dir / 'out' / name).read_bytes()


def test_eval_reports_both_models(trained, synth_dir, capsys):
    assert main(['eval', '--manifest', trained, '--format', 'md'] + SMALL) == EXIT_OK
    printed = capsys.readouterr().out
    assert 'stgcn' in printed and 'ha' in printed
    rows = read_rows(synth_dir / 'out' / 'metrics.csv')
    assert rows[0] == ['horizon_minutes', 'model', 'mae', 'mape', 'rmse', 'n']
    assert [(r[0], r[1]) for r in rows[1:]] == [('15', 'ha'), ('15', 'stgcn'), ('30', 'ha'), ('30', 'stgcn'), ('45', 'ha'), ('45', 'stgcn')]
    assert all(float(r[2]) >= 0.0 and float(r[4]) >= float(r[2]) for r in rows[1:])
    assert (synth_dir / 'out' / 'metrics.md').read_text(encoding='utf-8').startswith('# STGCN Forecast Metrics')


def test_eval_workers_match_serial(trained, synth_dir):
    assert main(['eval', '--manifest', trained, '--workers', '1'] + SMALL) == EXIT_OK
    serial = (synth_dir / 'out' / 'metrics.csv').read_bytes()
    assert main(['eval', '--manifest', trained, '--workers', '2'] + SMALL) == EXIT_OK
    assert (synth_dir / 'out' / 'metrics.csv').read_bytes() == serial


def test_predict_single_window_and_series(trained, synth_dir):
    assert main(['predict', '--manifest', trained, '--window', '0'] + SMALL) == EXIT_OK
    rows = read_rows(synth_dir / 'out' / 'forecast.csv')
    assert rows[0] == ['timestamp', 'station', 'horizon_minutes', 'forecast']
    assert len(rows) == 1 + 3 * 4
    assert {r[2] for r in rows[1:]} == {'15', '30', '45'}

    assert main(['predict', '--manifest', trained, '--series'] + SMALL) == EXIT_OK
    series = read_rows(synth_dir / 'out' / 'series.csv')
    assert series[0] == ['timestamp', 'station', 'horizon_minutes', 'truth', 'stgcn', 'ha']
    assert (len(series) - 1) % 12 == 0

    assert main(['predict', '--manifest', trained, '--window', '100000'] + SMALL) == EXIT_INPUT


def test_direct_mode_trains_one_model_per_horizon(synth_dir):
    manifest = str(synth_dir / 'manifest.json')
    direct = ['--set', 'horizon_mode=direct', '--set', 'horizons=[3]', '--set', 'output_dir=direct'] + SMALL
    assert main(['train', '--manifest', manifest] + direct) == EXIT_OK
    assert (synth_dir / 'direct' / 'checkpoint_h3.stgc').exists()
    assert (synth_dir / 'direct' / 'history_h3.csv').exists()
    assert main(['eval', '--manifest', manifest] + direct) == EXIT_OK
    rows = read_rows(synth_dir / 'direct' / 'metrics.csv')
    assert [(r[0], r[1]) for r in rows[1:]] == [('15', 'ha'), ('15', 'stgcn')]


def test_sample_graph_matches_golden(tmp_path):
    manifest = tmp_path / 'manifest.json'
    manifest.write_text(json.dumps({'distance_csv': str(SAMPLE_DIR / 'distances.csv'), 'output_dir': str(tmp_path / 'out')}), encoding='utf-8')
    assert main(['build-graph', '--manifest', str(manifest)]) == EXIT_OK
    assert (tmp_path / 'out' / 'adjacency.csv').read_text(encoding='utf-8') == (SAMPLE_DIR / 'adjacency.csv').read_text(encoding='utf-8')


def test_input_errors_exit_with_code_two(tmp_path, synth_dir, capsys):
    assert main(['train', '--manifest', str(tmp_path / 'missing.json')]) == EXIT_INPUT
    assert 'error:' in capsys.readouterr().err
    assert main(['build-graph', '--manifest', str(synth_dir / 'manifest.json'), '--set', 'variant=spline']) == EXIT_INPUT
    assert main(['eval', '--manifest', str(synth_dir / 'manifest.json'), '--set', 'output_dir=empty']) == EXIT_INPUT
    assert main(['build-graph', '--manifest', str(synth_dir / 'manifest.json'), '--log-level', 'chatty']) == EXIT_INPUT
    assert main(['eval', '--manifest', str(synth_dir / 'manifest.json'), '--format', 'pdf', '--checkpoint', str(tmp_path / 'none.stgc')]) == EXIT_INPUT


def test_gradcheck_passes(capsys):
    assert main(['gradcheck']) == EXIT_OK
    assert 'layer gradient checks passed' in capsys.readouterr().out


@pytest.mark.slow
def test_stgcn_beats_historical_average_on_synthetic_benchmark(tmp_path):
    start = time.perf_counter()
    out = tmp_path / 'bench'
    assert main(['synth', '--out', str(out), '--n', '20', '--days', '40', '--seed', '42']) == EXIT_OK
    manifest = str(out / 'manifest.json')
    args = ['--set', 'horizons=[1,3,6]', '--set', 'variant=cheb', '--set', 'train.epochs=20']
    assert main(['train', '--manifest', manifest] + args) == EXIT_OK
    assert main(['eval', '--manifest', manifest] + args) == EXIT_OK
    mae = {(int(r[0]), r[1]): float(r[2]) for r in read_rows(out / 'out' / 'metrics.csv')[1:]}
    for minutes in (5, 15, 30):
        assert mae[(minutes, 'stgcn')] < mae[(minutes, 'ha')], minutes
    assert time.perf_counter() - start < 600.0
