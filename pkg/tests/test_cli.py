import json

import pandas as pd
import pytest

from online_huffman import ohc_encode, save_encoded
from osa_lab import main
from slot_allocation import load_instance, save_instance, validate_instance


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.json"
    save_instance(validate_instance((2, 1), (0, 1)), str(path))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gen_instance_to_stdout(capsys):
    code, out, _ = run(capsys, 'gen-instance', '--family', 'uniform', '--n', '4')
    assert code == 0
    assert json.loads(out)['f'] == [1, 1, 1, 1]


def test_gen_instance_to_file(capsys, tmp_path):
    path = tmp_path / "zipf.json"
    code, _, _ = run(capsys, 'gen-instance', '--spec', 'zipf:s=1,n=3', '--out', str(path))
    assert code == 0
    assert load_instance(str(path)).f.weights == pytest.approx((1, 1 / 2, 1 / 3))


def test_sample_rows_are_permutations(capsys, instance_file):
    code, out, _ = run(capsys, '--seed', '4', 'sample', '--instance', instance_file, '--count', '5')
    assert code == 0
    rows = [sorted(map(int, line.split(','))) for line in out.strip().splitlines()]
    assert rows == [[0, 1]] * 5
    # Same seed, same rows
    assert run(capsys, 'sample', '--instance', instance_file, '--count', '5', '--seed', '4')[1] == out


def test_sample_with_merge(capsys, instance_file):
    code, out, _ = run(capsys, 'sample', '--instance', instance_file, '--count', '3', '--merge-part', '0')
    assert code == 0
    assert len(out.strip().splitlines()) == 3


def test_evaluate_json(capsys, instance_file):
    code, out, err = run(capsys, 'evaluate', '--instance', instance_file)
    assert code == 0
    report = json.loads(out)
    assert report['ratio'] == pytest.approx(4 / 3)
    assert report['bounds'][0]['satisfied'] is True
    assert "Loaded instance with n=2" in err


def test_evaluate_csv_to_file(capsys, instance_file, tmp_path):
    out = tmp_path / "report.csv"
    code, _, _ = run(capsys, 'evaluate', '--instance', instance_file, '--format', 'csv', '--out', str(out))
    assert code == 0
    assert pd.read_csv(out).loc[0, 'ratio'] == pytest.approx(4 / 3)


def test_evaluate_monte_carlo_spec(capsys):
    code, out, _ = run(capsys, 'evaluate', '--spec', 'lowerbound-concave:n=5,eps=0.1', '--mode', 'mc',
                       '--trials', '4000', '--bound', 'concave')
    assert code == 0
    report = json.loads(out)
    assert report['method'] == 'mc'
    assert report['trials'] == 4000


def test_bounds(capsys, instance_file):
    code, out, _ = run(capsys, 'bounds', '--instance', instance_file)
    assert code == 0
    kinds = [report['kind'] for report in json.loads(out)]
    assert kinds == ['general', 'concave', 'log', 'ohc']


def test_lowerbound(capsys):
    code, out, _ = run(capsys, 'lowerbound', '--kind', 'concave', '--n', '3', '--eps', '0.5')
    assert code == 0
    data = json.loads(out)
    assert data['f'] == [1, 0.5, 0.5]
    assert data['c'] == [0, 1, 1]


def test_ucode(capsys):
    code, out, _ = run(capsys, 'ucode', '--rank', '2')
    assert code == 0
    assert json.loads(out) == {'rank': 2, 'length': 5, 'bits': '01000'}
    code, out, _ = run(capsys, 'ucode', '--kraft', '1', '--format', 'csv')
    assert out.splitlines() == ['ranks,kraft_sum', '1,0.25']


def test_ohc_round_trip(capsys, tmp_path):
    source = tmp_path / "text.txt"
    source.write_bytes(b"abracadabra, abracadabra")
    encoded = tmp_path / "text.ohc"
    decoded = tmp_path / "text.out"
    assert run(capsys, 'ohc', 'encode', '--in', str(source), '--out', str(encoded))[0] == 0
    assert run(capsys, 'ohc', 'decode', '--in', str(encoded), '--out', str(decoded))[0] == 0
    assert decoded.read_bytes() == source.read_bytes()

    code, out, _ = run(capsys, 'ohc', 'report', '--in', str(source))
    assert code == 0
    report = json.loads(out)
    assert report['symbol_count'] == 24
    assert report['assignment_cost'] <= report['guarantee']


@pytest.mark.parametrize("width", ["8", "16", "31"])
def test_ohc_wide_literal_round_trip(capsys, tmp_path, width):
    source = tmp_path / "bytes.bin"
    source.write_bytes(bytes(range(256)) + b"abracadabra")
    encoded = tmp_path / "bytes.ohc"
    decoded = tmp_path / "bytes.out"
    assert run(capsys, 'ohc', 'encode', '--in', str(source), '--out', str(encoded), '--width', width)[0] == 0
    assert run(capsys, 'ohc', 'decode', '--in', str(encoded), '--out', str(decoded))[0] == 0
    assert decoded.read_bytes() == source.read_bytes()


def test_ohc_decode_refuses_symbols_wider_than_a_byte(capsys, tmp_path):
    encoded = tmp_path / "ids.ohc"
    stream, _ = ohc_encode([300, 7, 300], width=16)
    save_encoded(stream, str(encoded))
    code, _, err = run(capsys, 'ohc', 'decode', '--in', str(encoded), '--out', str(tmp_path / "ids.out"))
    assert code == 2
    assert "Symbol 300" in err
    assert not (tmp_path / "ids.out").exists()


def test_ohc_token_round_trip(capsys, tmp_path):
    source = tmp_path / "words.txt"
    source.write_text("to be or not to be")
    encoded = tmp_path / "words.ohc"
    decoded = tmp_path / "words.out"
    assert run(capsys, 'ohc', 'encode', '--in', str(source), '--out', str(encoded), '--tokens')[0] == 0
    assert (tmp_path / "words.ohc.vocab.json").exists()
    assert run(capsys, 'ohc', 'decode', '--in', str(encoded), '--out', str(decoded))[0] == 0
    assert decoded.read_text() == "to be or not to be"


def test_sweep(capsys, tmp_path):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, 'sweep', '--families', 'random', 'zipf:s=1.5,costs=log2', '--n', '3', '5',
                     '--policies', 'fcfs', 'optimal-dp', '--out', str(out))
    assert code == 0
    df = pd.read_csv(out)
    assert len(df) == 8
    assert df['satisfied'].all()


def test_usage_errors_exit_with_one(capsys):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(['evaluate', '--policy', 'greedy', '--instance', 'x.json'])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(['ohc', 'encode', '--in', 'x.txt'])
    assert info.value.code == 1


def test_runtime_errors_exit_with_two(capsys, tmp_path):
    code, _, err = run(capsys, 'evaluate', '--instance', str(tmp_path / "missing.json"))
    assert code == 2
    assert err.startswith("Error:")

    bad = tmp_path / "bad.ohc"
    bad.write_bytes(b"NOPE" + bytes(9))
    code, _, err = run(capsys, 'ohc', 'decode', '--in', str(bad), '--out', str(tmp_path / "x"))
    assert code == 2
    assert "magic" in err

    code, _, _ = run(capsys, 'evaluate', '--spec', 'random:n=30', '--mode', 'exact', '--policy', 'optimal-dp')
    assert code == 2


def test_unwritable_output_exits_with_two(capsys, tmp_path, instance_file):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    target = str(blocker / "deeper" / "out.json")
    commands = [
        ('lowerbound', '--kind', 'concave', '--n', '3', '--eps', '0.5', '--out', target),
        ('gen-instance', '--family', 'uniform', '--n', '3', '--out', target),
        ('evaluate', '--instance', instance_file, '--out', target),
        ('ucode', '--rank', '3', '--out', target),
        ('sweep', '--families', 'random', '--n', '3', '--out', target),
    ]
    for argv in commands:
        code, _, err = run(capsys, *argv)
        assert code == 2, argv
        assert "Error: Could not write" in err, argv


def test_missing_output_directories_are_created(capsys, tmp_path):
    path = tmp_path / "nope" / "deeper" / "lb.json"
    code, _, _ = run(capsys, 'lowerbound', '--kind', 'concave', '--n', '3', '--eps', '0.5', '--out', str(path))
    assert code == 0
    assert load_instance(str(path)).c.costs == (0, 1, 1)
