import json

import numpy as np
import pytest

from tempokit.cli import load_config, main
from tempokit.errors import InvalidConfig
from tempokit.tcn.serialization import read_tensors


@pytest.fixture
def click(tmp_path):
    assert main(['synth', '--bpm', '120', '--duration', '10', '--out', str(tmp_path / 'c'),
                 '--activation']) == 0
    return tmp_path / 'c'


def test_synth_files(click):
    assert len(click.with_suffix('.beats').read_text().splitlines()) == 20
    assert click.with_suffix('.wav').exists()
    assert len(click.with_suffix('.act').read_text().splitlines()) == 1000


def test_synth_negative_bpm(tmp_path, capsys):
    assert main(['synth', '--bpm', '-5', '--out', str(tmp_path / 'x')]) == 1
    err = capsys.readouterr().err
    assert err.startswith('tempokit: error:') and err.count('\n') == 1


def test_estimate_with_activation(click, capsys):
    code = main(['estimate', str(click.with_suffix('.wav')), '--method', 'comb-estimate',
                 '--activation', str(click.with_suffix('.act'))])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {'clip', 'method', 'bpm', 'confidence'}
    assert abs(out['bpm'] - 120) <= 4.8


@pytest.mark.parametrize('method', ['acf-estimate', 'dbn-estimate', 'crf-infer', 'dbn-infer',
                                    'comb-infer'])
def test_estimate_all_beat_paths(click, capsys, method):
    assert main(['estimate', '--activation', str(click.with_suffix('.act')),
                 '--method', method]) == 0
    assert abs(json.loads(capsys.readouterr().out)['bpm'] - 120) <= 4.8


def test_estimate_unknown_method(click):
    assert main(['estimate', str(click.with_suffix('.wav')), '--method', 'foo']) == 1


def test_estimate_missing_weights(click, tmp_path):
    assert main(['estimate', str(click.with_suffix('.wav')), '--method', 'direct',
                 '--model', str(tmp_path / 'missing.tcnw')]) == 2


def test_estimate_bad_activation(tmp_path):
    (tmp_path / 'bad.act').write_text('0.5\n1.7\n')
    assert main(['estimate', '--activation', str(tmp_path / 'bad.act'),
                 '--method', 'acf-estimate']) == 3


def test_unknown_flag():
    assert main(['estimate', '--bogus']) == 1
    assert main([]) == 1


def test_features(click, tmp_path):
    assert main(['features', str(click.with_suffix('.wav')), '--fps', '105',
                 '--out', str(tmp_path / 'f.csv'), '--format', 'csv']) == 0
    rows = (tmp_path / 'f.csv').read_text().splitlines()
    assert len(rows) == 1050 and len(rows[0].split(',')) == 81
    assert main(['features', str(click.with_suffix('.wav')), '--out',
                 str(tmp_path / 'f.tcnw')]) == 0
    assert read_tensors(tmp_path / 'f.tcnw')['spectrogram'].shape == (1000, 81)


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / 'ds'
    bpms = [str(b) for b in np.linspace(70, 160, 10)]
    assert main(['synth', '--bpm', *bpms, '--duration', '8', '--dataset', 'syn',
                 '--out', str(out)]) == 0
    return out / 'manifest.json'


def test_evaluate_all(dataset, tmp_path, capsys):
    report = tmp_path / 'r.json'
    assert main(['evaluate', '--manifest', str(dataset), '--oracle', '--method', 'all',
                 '--out', str(report), '--threads', '1']) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 7
    for line in lines[1:]:
        a1, a2 = map(float, line.split()[1:])
        assert 0 <= a1 <= 1 and 0 <= a2 <= 1
    data = json.loads(report.read_text())
    # 10 clips, 0.8 split -> 2 test clips, 7 methods each
    assert len(data['records']) == 14
    first = report.read_bytes()
    assert main(['evaluate', '--manifest', str(dataset), '--oracle', '--method', 'all',
                 '--out', str(report), '--threads', '1']) == 0
    assert report.read_bytes() == first


def test_evaluate_activation_dir(tmp_path, capsys):
    out = tmp_path / 'ds'
    assert main(['synth', '--bpm', '90', '130', '--duration', '8', '--dataset', 'syn',
                 '--out', str(out), '--activation']) == 0
    assert main(['evaluate', '--manifest', str(out / 'manifest.json'), '--all-clips',
                 '--activation-dir', str(out), '--method', 'acf-estimate']) == 0
    assert capsys.readouterr().out.splitlines()[1].split()[1] == '1.000'


def test_evaluate_needs_source(dataset):
    assert main(['evaluate', '--manifest', str(dataset)]) == 1


def test_train_and_estimate(dataset, tmp_path, capsys):
    weights = tmp_path / 'w.tcnw'
    code = main(['train', '--manifest', str(dataset), '--all-clips', '--fps-augment',
                 '--epochs', '2', '--layers', '2', '--filters', '4', '--out', str(weights)])
    assert code == 0
    err = capsys.readouterr().err
    assert 'training examples: 30' in err
    history = (tmp_path / 'w.history.csv').read_text().splitlines()
    assert len(history) == 1 + 2
    wav = dataset.parent / 'click000.wav'
    assert main(['estimate', str(wav), '--model', str(weights), '--method', 'direct']) == 0
    out = json.loads(capsys.readouterr().out)
    assert out['method'] == 'direct' and out['bpm'] > 0


def test_train_defaults():
    from tempokit.cli import build_parser
    args = build_parser().parse_args(['train', '--manifest', 'm', '--out', 'w'])
    assert args.lr == 0.0015 and not args.fps_augment


def test_config_file(tmp_path):
    path = tmp_path / 'c.json'
    path.write_text(json.dumps({'fps': 105, 'decoder': {'bpm_max': 200},
                                'training': {'learning_rate': 0.01}}))
    frontend, decoder, training = load_config(path)
    assert frontend.fps == 105 and decoder.bpm_max == 200 and training.learning_rate == 0.01
    path.write_text(json.dumps({'nonsense': 1}))
    with pytest.raises(InvalidConfig):
        load_config(path)


def test_console_script(tmp_path):
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, '-m', 'tempokit.cli', 'synth', '--bpm', '0',
                           '--out', str(tmp_path / 'x')], capture_output=True, text=True)
    assert proc.returncode == 1 and 'bpm' in proc.stderr
