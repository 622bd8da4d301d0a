#!/usr/bin/env python3
"""
Command-line front end for the slot allocation lab.

Subcommands:
    gen-instance   write a generated instance as JSON
    sample         draw sequences (sampling without replacement) as CSV rows
    evaluate       expected cost, OPT, ratio and bound check of a policy
    bounds         bound reports for an instance
    lowerbound     write one of the lower-bound instances
    ucode          codewords and Kraft partial sums of the universal code
    ohc            online Huffman encode / decode / report
    sweep          grid of instances and policies to CSV

Exit codes: 0 on success, 1 on a usage error, 2 on a runtime error.
Status lines go to stderr; results go to stdout or --out.
"""

import argparse
import json
import os
import sys

import pandas as pd

import config
from bounds import (
    applicable_bounds,
    entropy,
    lower_bound_instance_concave,
    lower_bound_instance_general,
    ohc_guarantee_report,
)
from errors import OsaLabError, OutputWriteError, SymbolTooWide
from experiments import (
    COST_FAMILIES,
    FREQUENCY_FAMILIES,
    MODES,
    POLICIES,
    SWEEP_COLUMNS,
    ExperimentConfig,
    InstanceSpec,
    gen_instance,
    read_corpus,
    report_row,
    run_experiment,
    save_sweep,
    sweep,
)
from online_huffman import (
    decode_tokens,
    encode_tokens,
    load_encoded,
    ohc_decode,
    ohc_encode,
    save_encoded,
)
from sampling import RandomSource, draw_without_replacement, merge_sample
from slot_allocation import load_instance, save_instance
from universal_code import codeword_for_rank, kraft_partial_sum


class LabArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def emit(text, out=None):
    """Write text to the --out file, or print it."""
    if out:
        try:
            directory = os.path.dirname(out)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(out, 'w') as file:
                file.write(text)
        except OSError as exc:
            raise OutputWriteError(f"Could not write {out}: {exc}") from exc
        print(f"Saved: {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _instance_spec(args):
    if args.spec:
        return InstanceSpec.parse(args.spec)
    return InstanceSpec(args.family, args.n, s=args.s, r=args.r, k=args.k, eps=args.eps, costs=args.costs)


def cmd_gen_instance(args):
    inst = gen_instance(_instance_spec(args), RandomSource(args.seed))
    if args.out:
        save_instance(inst, args.out)
    else:
        emit(json.dumps(inst.to_dict(), indent=2) + "\n")


def cmd_sample(args):
    inst = load_instance(args.instance)
    print(f"Loaded instance with n={inst.n} from {args.instance}", file=sys.stderr)
    rng = RandomSource(args.seed)
    part = [int(i) for i in args.merge_part.split(',') if i.strip()] if args.merge_part is not None else None
    rows = []
    for _ in range(args.count):
        seq = merge_sample(inst.f, part, rng) if part is not None else draw_without_replacement(inst.f, rng)
        rows.append(list(seq))
    emit(pd.DataFrame(rows).to_csv(index=False, header=False), args.out)


def _config_from(args):
    return ExperimentConfig(
        instance_path=args.instance,
        spec=InstanceSpec.parse(args.spec) if args.spec else None,
        corpus=args.corpus,
        tokenization=args.tokenization,
        corpus_costs=args.corpus_costs,
        policy=args.policy,
        mode=args.mode,
        trials=args.trials,
        seed=args.seed,
        bound=args.bound,
        out=args.out,
        format=args.format,
    )


def cmd_evaluate(args):
    report = run_experiment(_config_from(args), progress=args.progress)
    if args.out:
        return
    if args.format == 'csv':
        emit(pd.DataFrame([report_row(report)], columns=SWEEP_COLUMNS).to_csv(index=False))
    else:
        emit(json.dumps(report, indent=2) + "\n")


def cmd_bounds(args):
    inst = load_instance(args.instance)
    reports = [report.to_dict() for report in applicable_bounds(inst, args.bound)]
    reports.append(ohc_guarantee_report(entropy(inst.f)).to_dict())
    emit(json.dumps(reports, indent=2) + "\n", args.out)


def cmd_lowerbound(args):
    if args.kind == 'general':
        inst = lower_bound_instance_general(args.k, args.n, args.eps)
    else:
        inst = lower_bound_instance_concave(args.n, args.eps)
    if args.out:
        save_instance(inst, args.out)
    else:
        emit(json.dumps(inst.to_dict(), indent=2) + "\n")


def cmd_ucode(args):
    if args.rank is not None:
        cw = codeword_for_rank(args.rank)
        if args.format == 'json':
            text = json.dumps({'rank': cw.rank, 'length': cw.length, 'bits': cw.bits}) + "\n"
        else:
            text = f"rank,length,bits\n{cw.rank},{cw.length},{cw.bits}\n"
    else:
        total = kraft_partial_sum(args.kraft)
        if args.format == 'json':
            text = json.dumps({'ranks': args.kraft, 'kraft_sum': total}) + "\n"
        else:
            text = f"ranks,kraft_sum\n{args.kraft},{total!r}\n"
    emit(text, args.out)


def cmd_ohc_encode(args):
    out = args.out
    if args.tokens:
        tokens = read_corpus(args.input, 'whitespace')
        stream, report, vocabulary = encode_tokens(tokens, width=args.width or config.DEFAULT_TOKEN_WIDTH)
    else:
        stream, report = ohc_encode(read_corpus(args.input, 'bytes'), width=args.width or config.DEFAULT_LITERAL_WIDTH)
        vocabulary = None
    save_encoded(stream, out, vocabulary)
    print(f"Encoded {report.symbol_count} symbols ({report.distinct_symbols} distinct) "
          f"into {stream.bit_count} bits", file=sys.stderr)


def cmd_ohc_decode(args):
    out = args.out
    stream, vocabulary = load_encoded(args.input)
    if vocabulary is not None:
        data = ' '.join(decode_tokens(stream, vocabulary)).encode('utf-8')
    else:
        symbols = ohc_decode(stream)
        wide = next((symbol for symbol in symbols if symbol > 0xFF), None)
        if wide is not None:
            raise SymbolTooWide(f"Symbol {wide} does not fit in a byte and {args.input} has no vocabulary sidecar")
        data = bytes(symbols)
    try:
        directory = os.path.dirname(out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(out, 'wb') as file:
            file.write(data)
    except OSError as exc:
        raise OutputWriteError(f"Could not write {out}: {exc}") from exc
    print(f"Saved: {out}", file=sys.stderr)


def cmd_ohc_report(args):
    if args.tokens:
        _, report, _ = encode_tokens(read_corpus(args.input, 'whitespace'),
                                     width=args.width or config.DEFAULT_TOKEN_WIDTH)
    else:
        _, report = ohc_encode(read_corpus(args.input, 'bytes'), width=args.width or config.DEFAULT_LITERAL_WIDTH)
    emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)


def cmd_sweep(args):
    specs = []
    for family in args.families:
        for n in args.n:
            specs.append(InstanceSpec.parse(family, n=n) if ':' in family else
                         InstanceSpec(family, n, costs=args.costs, k=args.k, eps=args.eps))
    df = sweep(specs, policies=args.policies, mode=args.mode, trials=args.trials, seed=args.seed,
               bound=args.bound, progress=args.progress)
    out = args.out or os.path.join(config.OUTPUT_DIR, 'sweep.csv')
    save_sweep(df, out)


def _add_instance_spec_args(parser):
    parser.add_argument('--spec', help='Generator spec "family:key=value,...", e.g. "zipf:s=1,n=100,costs=log2"')
    parser.add_argument('--family', choices=FREQUENCY_FAMILIES, default='uniform')
    parser.add_argument('--n', type=int, default=4, help='Number of items')
    parser.add_argument('--s', type=float, default=1.0, help='Zipf exponent')
    parser.add_argument('--r', type=float, default=0.5, help='Geometric ratio')
    parser.add_argument('--K', dest='k', type=int, default=1, help='Zeros in zero-one costs / big items')
    parser.add_argument('--eps', type=float, default=0.01, help='Small-item mass of lower-bound instances')
    parser.add_argument('--costs', choices=COST_FAMILIES, default='linear')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=argparse.SUPPRESS, help='Seed for every random choice')
    common.add_argument('--out', default=argparse.SUPPRESS, help='Output file (default: stdout)')
    common.add_argument('--format', choices=('json', 'csv'), default=argparse.SUPPRESS)

    parser = LabArgumentParser(prog='osa_lab', description='Online slot allocation and online Huffman coding lab.')
    parser.add_argument('--seed', type=int, default=config.DEFAULT_SEED, help='Seed for every random choice')
    parser.add_argument('--out', default=None, help='Output file (default: stdout)')
    parser.add_argument('--format', choices=('json', 'csv'), default='json')
    commands = parser.add_subparsers(dest='command', required=True)

    gen = commands.add_parser('gen-instance', parents=[common], help='Generate an instance')
    _add_instance_spec_args(gen)
    gen.set_defaults(func=cmd_gen_instance)

    sample = commands.add_parser('sample', parents=[common], help='Draw sequences without replacement')
    sample.add_argument('--instance', required=True)
    sample.add_argument('--count', type=int, default=10)
    sample.add_argument('--merge-part', help='Comma-separated items: sample with the merge procedure on this split')
    sample.set_defaults(func=cmd_sample)

    evaluate = commands.add_parser('evaluate', parents=[common], help='Evaluate a policy')
    source = evaluate.add_mutually_exclusive_group(required=True)
    source.add_argument('--instance')
    source.add_argument('--spec')
    source.add_argument('--corpus')
    evaluate.add_argument('--tokenization', choices=('bytes', 'whitespace'), default='bytes')
    evaluate.add_argument('--corpus-costs', choices=('zero-one', 'linear', 'universal', 'log2'), default='universal')
    evaluate.add_argument('--policy', choices=POLICIES, default='fcfs')
    evaluate.add_argument('--mode', choices=MODES, default='exact')
    evaluate.add_argument('--trials', type=int, default=config.DEFAULT_TRIALS)
    evaluate.add_argument('--bound', choices=('general', 'concave', 'log', 'all', 'none'), default='general')
    evaluate.add_argument('--progress', action='store_true')
    evaluate.set_defaults(func=cmd_evaluate)

    bounds = commands.add_parser('bounds', parents=[common], help='Bound reports for an instance')
    bounds.add_argument('--instance', required=True)
    bounds.add_argument('--bound', choices=('general', 'concave', 'log', 'all', 'none'), default='all')
    bounds.set_defaults(func=cmd_bounds)

    lower = commands.add_parser('lowerbound', parents=[common], help='Write a lower-bound instance')
    lower.add_argument('--kind', choices=('general', 'concave'), required=True)
    lower.add_argument('--K', dest='k', type=int, default=1)
    lower.add_argument('--n', type=int, required=True)
    lower.add_argument('--eps', type=float, required=True)
    lower.set_defaults(func=cmd_lowerbound)

    ucode = commands.add_parser('ucode', parents=[common], help='Universal code lookups')
    query = ucode.add_mutually_exclusive_group(required=True)
    query.add_argument('--rank', type=int)
    query.add_argument('--kraft', type=int, metavar='N')
    ucode.set_defaults(func=cmd_ucode)

    ohc = commands.add_parser('ohc', help='Online Huffman codec')
    ohc_commands = ohc.add_subparsers(dest='ohc_command', required=True)
    for name, func, help_text in (('encode', cmd_ohc_encode, 'Encode a file'),
                                  ('decode', cmd_ohc_decode, 'Decode an .ohc file'),
                                  ('report', cmd_ohc_report, 'Code cost report for a file')):
        sub = ohc_commands.add_parser(name, parents=[common], help=help_text)
        sub.add_argument('--in', dest='input', required=True)
        if name != 'decode':
            sub.add_argument('--tokens', action='store_true', help='Whitespace tokens instead of bytes')
            sub.add_argument('--width', type=int, help='Literal width in bits')
        sub.set_defaults(func=func)

    sweep_cmd = commands.add_parser('sweep', parents=[common], help='Sweep instances and policies to CSV')
    sweep_cmd.add_argument('--families', nargs='+', default=['random'],
                           help='Families or full specs (family:key=value,...)')
    sweep_cmd.add_argument('--n', type=int, nargs='+', default=[4, 8])
    sweep_cmd.add_argument('--costs', choices=COST_FAMILIES, default='linear')
    sweep_cmd.add_argument('--K', dest='k', type=int, default=1)
    sweep_cmd.add_argument('--eps', type=float, default=0.01)
    sweep_cmd.add_argument('--policies', nargs='+', choices=POLICIES, default=['fcfs'])
    sweep_cmd.add_argument('--mode', choices=MODES, default='exact')
    sweep_cmd.add_argument('--trials', type=int, default=config.DEFAULT_TRIALS)
    sweep_cmd.add_argument('--bound', choices=('general', 'concave', 'log', 'none'), default='general')
    sweep_cmd.add_argument('--progress', action='store_true')
    sweep_cmd.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == 'ohc' and args.ohc_command in ('encode', 'decode') and not args.out:
        parser.error(f"ohc {args.ohc_command} needs --out")
    try:
        args.func(args)
    except OsaLabError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
