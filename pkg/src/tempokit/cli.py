"""
Command-line interface: ``tempokit {estimate,evaluate,train,synth,features}``.

Exit codes: 0 success, 1 usage or configuration error, 2 file I/O or format
error, 3 data or decoder error. Every failure prints one diagnostic line to
standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys

import numpy as np

from .annotations import ClipAnnotation, write_beats
from .audio import FrontendConfig, augment_fps, compute_spectrogram, load_audio, write_audio
from .errors import ConfigError, DataError, InvalidConfig, TempoKitError, UnknownMethod
from .evaluation import (DatasetManifest, evaluate, rebase_annotation, segment_clips,
                         split_train_test)
from .pipeline import METHODS, Activations, check_method, estimate_tempo, model_activations
from .postproc import BeatActivation, DecoderConfig
from .synth import (ClickTrackSpec, SyntheticActivationSpec, activation_from_beats,
                    gen_activation, gen_click_track, write_click_dataset)
from .tcn import (TcnConfig, TrainingConfig, encode_targets, init_model, load_weights,
                  save_weights, train)
from .tcn.serialization import write_tensors

logger = logging.getLogger('tempokit')

EXIT_USAGE, EXIT_IO, EXIT_DATA = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers -------------------------------------------------------------------

def load_config(path):
    """
    Read a JSON config into ``(FrontendConfig, DecoderConfig, TrainingConfig)``.

    Keys may be grouped under ``"frontend"``, ``"decoder"`` and ``"training"``
    or given flat; either way they must be field names of those classes.
    """
    classes = {'frontend': FrontendConfig, 'decoder': DecoderConfig,
               'training': TrainingConfig}
    values = {k: {} for k in classes}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise InvalidConfig(f'{path}: config must be a JSON object')
        for key, val in data.items():
            if key in classes and isinstance(val, dict):
                values[key].update(val)
                continue
            owners = [k for k, cls in classes.items()
                      if key in {f.name for f in dataclasses.fields(cls)}]
            if not owners:
                raise InvalidConfig(f'{path}: unknown config key {key!r}')
            for k in owners:
                values[k][key] = val
    out = []
    for k, cls in classes.items():
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values[k]) - names
        if unknown:
            raise InvalidConfig(f'unknown {k} keys: {", ".join(sorted(unknown))}')
        kw = {n: tuple(v) if isinstance(v, list) else v for n, v in values[k].items()}
        out.append(cls(**kw))
    return tuple(out)


def read_activation(path, fps):
    """Beat activation from a text file with one value per line."""
    try:
        values = np.loadtxt(path, dtype=np.float64, ndmin=1)
    except ValueError as exc:
        raise DataError(f'{path}: cannot parse activation values ({exc})') from exc
    try:
        return BeatActivation(values, fps)
    except ValueError as exc:
        raise DataError(f'{path}: {exc}') from exc


def write_activation(path, act):
    np.savetxt(path, act.values, fmt='%.6f')


def _finite(x):
    if not math.isfinite(x):
        raise DataError(f'non-finite result {x}')
    return float(x)


# -- commands ------------------------------------------------------------------

def cmd_estimate(args):
    check_method(args.method)
    frontend, decoder, _ = load_config(args.config)
    if args.activation is not None:
        if args.method == 'direct' and args.model is None:
            raise UsageError("method 'direct' needs --model (a tempo activation)")
        acts = Activations(read_activation(args.activation, args.fps))
        if args.model is not None:
            weights = load_weights(args.model)
            acts.tempo = model_activations(weights, load_audio(args.audio), frontend).tempo
        clip_name = args.audio or args.activation
    else:
        if args.audio is None:
            raise UsageError('an audio file or --activation is required')
        if args.model is None:
            raise UsageError('--model is required unless --activation is given')
        weights = load_weights(args.model)
        acts = model_activations(weights, load_audio(args.audio), frontend)
        clip_name = args.audio
    est = estimate_tempo(args.method, acts, decoder)
    print(json.dumps({'clip': clip_name, 'method': args.method, 'bpm': _finite(est.bpm),
                      'confidence': _finite(est.confidence)}, allow_nan=False))
    return 0


def _activation_source(args, frontend):
    if args.model is not None:
        weights = load_weights(args.model)

        def source(manifest, entry):
            return model_activations(weights, load_audio(manifest.resolve(entry.audio)),
                                     frontend)
    elif args.activation_dir is not None:
        def source(manifest, entry):
            path = os.path.join(args.activation_dir, f'{entry.clip_id}.act')
            return Activations(read_activation(path, args.fps))
    elif args.oracle:
        def source(manifest, entry):
            clip = load_audio(manifest.resolve(entry.audio))
            ann = manifest.annotation(entry)
            return Activations(activation_from_beats(ann.beat_times, clip.duration, args.fps))
    else:
        raise UsageError('one of --model, --activation-dir or --oracle is required')
    return source


def cmd_evaluate(args):
    if args.method != 'all':
        check_method(args.method)
    frontend, decoder, _ = load_config(args.config)
    manifest = DatasetManifest.load(args.manifest)
    if args.all_clips:
        test_ids = manifest.ids
    else:
        test_ids = split_train_test(manifest, args.split_ratio, args.split_seed).test_ids
    source = _activation_source(args, frontend)
    report = evaluate(manifest, args.method, test_ids, source, decoder, args.threads)
    if args.out is not None:
        with open(args.out, 'w') as fh:
            fh.write(report.to_json() + '\n')
    print(report.summary_table())
    return 0


def _training_examples(manifest, ids, frontend, augment):
    """Spectrogram/target pairs for 30 s segments of the given clips."""
    examples = []
    for cid in sorted(ids):
        entry = manifest.entry(cid)
        clip = load_audio(manifest.resolve(entry.audio))
        ann = manifest.annotation(entry)
        for start, end in segment_clips(clip.duration, ann):
            lo, hi = int(round(start * clip.sample_rate)), int(round(end * clip.sample_rate))
            seg = dataclasses.replace(clip, samples=clip.samples[lo:hi])
            seg_ann = rebase_annotation(ann, start, end)
            if seg_ann.reference_bpm is None and len(seg_ann.beat_times) >= 2:
                seg_ann = ClipAnnotation(seg_ann.beat_times,
                                         60.0 / np.median(np.diff(seg_ann.beat_times)),
                                         seg_ann.clip_id)
            specs = augment_fps(seg, frontend) if augment else [compute_spectrogram(seg, frontend)]
            for spec in specs:
                examples.append((spec, encode_targets(seg_ann, spec.fps, 300, spec.num_frames)))
    return examples


def cmd_train(args):
    frontend, _, tcfg = load_config(args.config)
    tcfg = dataclasses.replace(tcfg, learning_rate=args.lr, seed=args.seed,
                               max_epochs=args.epochs, early_stop_patience=args.patience)
    tcfg.validate()
    manifest = DatasetManifest.load(args.manifest)
    if args.all_clips:
        ids = manifest.ids
    else:
        ids = split_train_test(manifest, args.split_ratio, args.split_seed).train_ids
    if not ids:
        raise DataError('training split is empty')
    examples = _training_examples(manifest, ids, frontend, args.fps_augment)
    logger.info('training examples: %d', len(examples))
    validation = None
    if args.val_manifest is not None:
        val = DatasetManifest.load(args.val_manifest)
        validation = _training_examples(val, val.ids, frontend, False)
    cfg = TcnConfig(num_bands=frontend.num_bands, num_layers=args.layers,
                    dilations=tuple(2 ** i for i in range(args.layers)),
                    num_filters=args.filters)
    weights = init_model(cfg, args.seed)
    best, history = train(weights, examples, tcfg, validation)
    save_weights(best, args.out)
    history.to_csv(args.history or os.path.splitext(args.out)[0] + '.history.csv')
    return 0


def cmd_synth(args):
    specs = [ClickTrackSpec(bpm=b, duration=args.duration, timing_jitter_std=args.jitter,
                            seed=args.seed + i) for i, b in enumerate(args.bpm)]
    for spec in specs:
        spec.validate()
    if args.dataset is not None:
        write_click_dataset(args.out, specs, dataset=args.dataset)
        if args.activation:
            for i, spec in enumerate(specs):
                act, _ = gen_activation(SyntheticActivationSpec(
                    bpm=spec.bpm, fps=args.fps, duration=spec.duration,
                    noise_std=args.noise, seed=spec.seed, jitter_std=spec.timing_jitter_std))
                write_activation(os.path.join(args.out, f'click{i:03d}.act'), act)
        return 0
    if len(specs) != 1:
        raise UsageError('several --bpm values need --dataset (write a directory)')
    clip, ann = gen_click_track(specs[0])
    write_audio(args.out + '.wav', clip)
    write_beats(args.out + '.beats', ann.beat_times)
    if args.activation:
        act, _ = gen_activation(SyntheticActivationSpec(
            bpm=specs[0].bpm, fps=args.fps, duration=args.duration, noise_std=args.noise,
            seed=args.seed, jitter_std=args.jitter))
        write_activation(args.out + '.act', act)
    return 0


def cmd_features(args):
    frontend, _, _ = load_config(args.config)
    frontend = dataclasses.replace(frontend, fps=args.fps)
    spec = compute_spectrogram(load_audio(args.audio), frontend)
    if args.format == 'csv':
        np.savetxt(args.out, spec.values, fmt='%.6f', delimiter=',')
    else:
        write_tensors(args.out, {'spectrogram': spec.values,
                                 'band_centers': spec.band_centers,
                                 'fps': np.array([spec.fps])})
    return 0


# -- parser --------------------------------------------------------------------

def build_parser():
    p = _Parser(prog='tempokit', description='Tempo estimation from solo-instrument audio.')
    p.add_argument('-v', '--verbose', action='store_true', help='log progress to stderr')
    sub = p.add_subparsers(dest='command', required=True, parser_class=_Parser)

    e = sub.add_parser('estimate', help='estimate the tempo of one clip')
    e.add_argument('audio', nargs='?', help='WAV file (44.1 kHz)')
    e.add_argument('--model', help='TCNW weight file')
    e.add_argument('--method', default='direct', help=f'one of {", ".join(METHODS)}')
    e.add_argument('--config', help='JSON config file')
    e.add_argument('--activation', help='beat activation text file (replaces the model)')
    e.add_argument('--fps', type=float, default=100.0, help='frame rate of --activation')
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser('evaluate', help='Acc1/Acc2 on the test split of a manifest')
    v.add_argument('--manifest', required=True)
    v.add_argument('--method', default='all', help='a method name or "all"')
    v.add_argument('--model')
    v.add_argument('--activation-dir', help='directory of <clip_id>.act activation files')
    v.add_argument('--oracle', action='store_true',
                   help='use activations rendered from the annotated beats')
    v.add_argument('--fps', type=float, default=100.0)
    v.add_argument('--split-seed', type=int, default=1234)
    v.add_argument('--split-ratio', type=float, default=0.8)
    v.add_argument('--all-clips', action='store_true', help='evaluate every clip, no split')
    v.add_argument('--threads', type=int, help='worker threads (default TEMPOKIT_THREADS)')
    v.add_argument('--config')
    v.add_argument('--out', help='report JSON path')
    v.set_defaults(func=cmd_evaluate)

    t = sub.add_parser('train', help='train a TCN on the training split of a manifest')
    t.add_argument('--manifest', required=True)
    t.add_argument('--out', required=True, help='output TCNW weight file')
    t.add_argument('--history', help='history CSV (default <out>.history.csv)')
    t.add_argument('--epochs', type=int, default=150)
    t.add_argument('--patience', type=int, default=20)
    t.add_argument('--lr', type=float, default=0.0015)
    t.add_argument('--seed', type=int, default=0)
    t.add_argument('--fps-augment', action='store_true', help='train at 95, 100 and 105 fps')
    t.add_argument('--val-manifest', help='validation manifest (default: training data)')
    t.add_argument('--split-seed', type=int, default=1234)
    t.add_argument('--split-ratio', type=float, default=0.8)
    t.add_argument('--all-clips', action='store_true', help='train on every clip, no split')
    t.add_argument('--layers', type=int, default=11)
    t.add_argument('--filters', type=int, default=16)
    t.add_argument('--config')
    t.set_defaults(func=cmd_train)

    s = sub.add_parser('synth', help='render synthetic click tracks')
    s.add_argument('--bpm', type=float, nargs='+', required=True)
    s.add_argument('--duration', type=float, default=10.0)
    s.add_argument('--out', required=True,
                   help='path prefix (writes .wav/.beats) or, with --dataset, a directory')
    s.add_argument('--dataset', help='write a manifest dataset with this name')
    s.add_argument('--jitter', type=float, default=0.0, help='beat timing jitter std (s)')
    s.add_argument('--seed', type=int, default=0)
    s.add_argument('--activation', action='store_true', help='also write a .act activation')
    s.add_argument('--noise', type=float, default=0.0, help='activation noise std')
    s.add_argument('--fps', type=float, default=100.0)
    s.set_defaults(func=cmd_synth)

    f = sub.add_parser('features', help='dump the log-filterbank spectrogram')
    f.add_argument('audio')
    f.add_argument('--fps', type=float, default=100.0)
    f.add_argument('--out', required=True)
    f.add_argument('--format', choices=('tcnw', 'csv'), default='tcnw')
    f.add_argument('--config')
    f.set_defaults(func=cmd_features)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format='%(message)s', stream=sys.stderr)
        if args.command == 'train':
            logger.setLevel(logging.INFO)
            if not logger.handlers:
                handler = logging.StreamHandler(sys.stderr)
                handler.setFormatter(logging.Formatter('%(message)s'))
                logger.addHandler(handler)
                logger.propagate = False
        return args.func(args)
    except (UsageError, ConfigError, UnknownMethod) as exc:
        code, msg = EXIT_USAGE, exc
    except (OSError, json.JSONDecodeError) as exc:  # includes FileFormatError, MissingFile
        code, msg = EXIT_IO, exc
    except (TempoKitError, ArithmeticError, ValueError, KeyError) as exc:
        code, msg = EXIT_DATA, exc
    print(f'tempokit: error: {msg}'.splitlines()[0], file=sys.stderr)
    return code


if __name__ == '__main__':
    sys.exit(main())
