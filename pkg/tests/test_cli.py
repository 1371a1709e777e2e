import json
from fractions import Fraction

import numpy as np
import pytest

from sqhard import io
from sqhard.cli import main
from sqhard.junta import ProductInstance, IsingInstance
from sqhard.scalar import Arith, parse_scalar
from sqhard.sqharness import SubsetFamily
from sqhard.univariate import custom, point_mass, raw_moment, uniform_binomial

F256 = Arith("float", 256)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def kv(text):
    out = {}
    for line in text.splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k] = v
    return out


def test_gen_univariate_exact(tmp_path, capsys):
    path = tmp_path / "u.json"
    code, out, _ = run(capsys, "gen", "univariate", "--target", "binary", "--m", 16, "--k", 4, "--eps", "1/128",
                       "-o", path)
    assert code == 0 and kv(out)["overall"] == "PASS"
    A = io.to_univariate(io.read_instance(path))
    B = uniform_binomial(16)
    assert all(raw_moment(A, i) == raw_moment(B, i) for i in range(1, 5))
    assert all(s.count("/") == 1 for s in io.read_instance(path).pmf)


def test_gen_zero_shift_is_binomial(tmp_path, capsys):
    path = tmp_path / "u0.json"
    assert run(capsys, "gen", "univariate", "--m", 16, "--k", 4, "--eps", 0, "-o", path)[0] == 0
    assert io.to_univariate(io.read_instance(path)).pmf == uniform_binomial(16).pmf


def test_gen_family(tmp_path, capsys):
    path = tmp_path / "f.json"
    code, out, _ = run(capsys, "gen", "family", "--M", 40, "--m", 4, "--c", "1/4", "--size", 8, "--seed", 7, "-o", path)
    assert code == 0 and kv(out)["overall"] == "PASS"
    code, out, _ = run(capsys, "verify", path)
    assert code == 0


def test_gen_ising_float_file(tmp_path, capsys):
    path = tmp_path / "i.json"
    assert run(capsys, "gen", "ising", "--M", 8, "--m", 3, "--delta-pair", "1/10", "-o", path)[0] == 0
    inst = io.read_instance(path)
    assert inst.mode == "float" and inst.precision_bits == 256
    assert run(capsys, "verify", path)[0] == 0


def test_verify_fresh_and_perturbed(tmp_path, capsys):
    path = tmp_path / "j.json"
    run(capsys, "gen", "junta", "--m", 4, "--k", 2, "--eps", "1/64", "--M", 10, "--seed", 3, "-o", path)
    code, out, _ = run(capsys, "verify", path, "--suite", "identities")
    assert code == 0 and "FAIL" not in out
    inst = io.read_instance(path)
    inst.pmf[1] = str(Fraction(inst.pmf[1]) + Fraction(1, 10 ** 6))
    io.write_instance(inst, path)
    code, out, _ = run(capsys, "verify", path, "--suite", "identities")
    assert code == 3 and kv(out)["check.normalization"].startswith("FAIL")


def test_verify_bounds_directory(tmp_path, capsys):
    for eps in ("1/256", "1/128", "1/64"):
        run(capsys, "gen", "univariate", "--m", 16, "--k", 4, "--eps", eps, "--C", "1/4",
            "-o", tmp_path / f"u{eps.split('/')[1]}.json")
    code, out, _ = run(capsys, "verify", tmp_path, "--suite", "bounds")
    assert code == 0
    assert "report = ratio_table" in out
    assert sum(1 for k in kv(out) if k.endswith("chi2.ratio")) >= 3


def test_correlate_outputs(tmp_path, capsys):
    a, f1, f = tmp_path / "a.json", tmp_path / "f1.json", tmp_path / "f.json"
    run(capsys, "gen", "univariate", "--m", 4, "--k", 2, "--eps", "1/64", "-o", a)
    run(capsys, "gen", "family", "--M", 12, "--m", 4, "--c", "1/4", "--size", 1, "-o", f1)
    code, out, _ = run(capsys, "correlate", a, f1)
    vals = kv(out)
    assert code == 0 and vals["gamma"] == "0/1" and vals["s"] == "1"
    run(capsys, "gen", "family", "--M", 12, "--m", 4, "--c", "1/4", "--size", 6, "--seed", 2, "-o", f)
    code, out, _ = run(capsys, "correlate", a, f, "--brute")
    vals = kv(out)
    assert code == 0 and vals["max_abs_diff"] == "0"
    assert {"prop.tau", "prop.budget", "prop.tolerance"} <= set(vals)


def test_correlate_incompatible(tmp_path, capsys):
    a, f = tmp_path / "a.json", tmp_path / "f.json"
    run(capsys, "gen", "univariate", "--m", 4, "--k", 2, "--eps", "1/64", "-o", a)
    run(capsys, "gen", "family", "--M", 40, "--m", 5, "--c", "1/4", "--size", 2, "-o", f)
    assert run(capsys, "correlate", a, f)[0] == 1


def test_sample_reproducible(tmp_path, capsys):
    p = tmp_path / "p.json"
    run(capsys, "gen", "product", "--M", 7, "--m", 3, "--eps", 0, "-o", p)
    _, first, _ = run(capsys, "sample", p, "--n", 4, "--seed", 1)
    _, second, _ = run(capsys, "sample", p, "--n", 4, "--seed", 1)
    lines = first.splitlines()
    assert first == second and len(lines) == 4
    assert all(len(l) == 7 and set(l) <= {"0", "1"} for l in lines)


def test_sample_point_mass_columns(tmp_path, capsys):
    path = tmp_path / "pm.json"
    io.write_instance(io.from_univariate(point_mass(3, 3), {"M": 9}, kind="junta", S=(1, 4, 8)), path)
    _, out, _ = run(capsys, "sample", path, "--n", 200, "--seed", 4)
    rows = out.splitlines()
    assert all(r[1] == r[4] == r[8] == "1" for r in rows)


def test_sample_product_mean(tmp_path, capsys):
    p, s = tmp_path / "p.json", tmp_path / "s.txt"
    run(capsys, "gen", "product", "--M", 4, "--S", "0,2", "--eps", "1/10", "-o", p)
    assert run(capsys, "sample", p, "--n", 10 ** 6, "--seed", 9, "-o", s)[0] == 0
    bits = np.frombuffer(s.read_bytes(), dtype=np.uint8).reshape(-1, 5)[:, :4] - ord("0")
    means = bits.mean(axis=0)
    assert abs(means[0] - 0.6) < 0.002 and abs(means[2] - 0.6) < 0.002
    assert abs(means[1] - 0.5) < 0.002


def test_budget_command(capsys):
    code, out, _ = run(capsys, "budget", "--gamma", 2, "--beta", 1, "--s", 10)
    assert code == 0 and kv(out)["budget"] == "20/1" and kv(out)["tolerance"] == "2/1"
    code, out, _ = run(capsys, "budget", "--chi2", "1/10", "--m", 16, "--k", 4, "--s", 100, "--json")
    assert code == 0 and json.loads(out)[0]["overall"] == "PASS"
    assert run(capsys, "budget")[0] == 1


def test_oracle_demo(tmp_path, capsys):
    path = tmp_path / "j.json"
    run(capsys, "gen", "junta", "--m", 4, "--k", 2, "--eps", "1/64", "--M", 8, "-o", path)
    code, out, _ = run(capsys, "oracle-demo", path, "--queries", 30)
    assert code == 0 and kv(out)["check.low_degree_blind"].startswith("PASS")


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["gen", "nonsense"])
    assert e.value.code == 1
    assert run(capsys, "gen", "univariate", "--m", 4)[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "verify", bad)[0] == 1
    assert run(capsys, "verify", tmp_path / "missing.json")[0] == 1
    code, _, err = run(capsys, "gen", "univariate", "--m", 16, "--k", 4, "--eps", "1/16", "--C", "3/16")
    assert code == 2 and "A(7)" in err
    assert run(capsys, "gen", "univariate", "--m", 4, "--k", 9, "--eps", "1/64")[0] == 2


def test_deterministic_generation(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "gen", "junta", "--m", 8, "--k", 4, "--eps", "1/64", "--C", "3/8", "--M", 20, "--seed", 42,
            "-o", tmp_path / f"{name}.json")
        run(capsys, "gen", "ising", "--M", 9, "--m", 4, "--delta-pair", "1/9", "--seed", 5, "-o", tmp_path / f"{name}i.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "ai.json").read_bytes() == (tmp_path / "bi.json").read_bytes()


# round trips


def _random_instance(kind, rng):
    m = int(rng.integers(1, 9))
    M = m + int(rng.integers(1, 8))
    S = sorted(int(i) for i in rng.choice(M, m, replace=False))
    if kind in ("univariate", "junta"):
        if rng.random() < 0.5:
            w = [Fraction(int(v), int(rng.integers(1, 10 ** 6))) for v in rng.integers(1, 10 ** 6, size=m + 1)]
            A = custom([v / sum(w) for v in w])
        else:
            w = [F256.num(float(v)) * F256.mp.pi for v in rng.random(m + 1)]
            A = custom([v / sum(w) for v in w], F256)
        return io.from_univariate(A, {"m": m, "M": M}, int(rng.integers(0, 2 ** 63)), {"note": "rt"}, kind,
                                  S if kind == "junta" else ())
    if kind == "product":
        return io.from_product(ProductInstance(M, tuple(S), Fraction(int(rng.integers(0, 50)), 100)))
    if kind == "ising":
        c = F256.num(float(rng.random())) / (10 * m)
        return io.from_ising(IsingInstance(M, tuple(S), c, Fraction(1, 2)), Fraction(1, 2))
    subsets = [sorted(int(i) for i in rng.choice(M, m, replace=False)) for _ in range(3)]
    return io.from_family(SubsetFamily(M, m, Fraction(1, 4), [tuple(s) for s in subsets]))


@pytest.mark.parametrize("kind", io.KINDS)
def test_round_trip_100(kind):
    rng = np.random.default_rng(hash(kind) % 2 ** 32)
    for _ in range(100):
        inst = _random_instance(kind, rng)
        text = io.serialize(inst)
        again = io.parse(text)
        assert again == inst and io.serialize(again) == text
        if kind in ("univariate", "junta"):
            a = inst.arith
            assert [parse_scalar(v, a) for v in again.pmf] == [parse_scalar(v, a) for v in inst.pmf]


def test_parse_rejects_malformed():
    good = io.serialize(io.from_univariate(uniform_binomial(2), {"m": 2}))
    raw = json.loads(good)
    for mutate in ({"format_version": 9}, {"kind": "blob"}, {"extra": 1}, {"mode": "float"}):
        with pytest.raises(io.FormatError):
            io.parse(json.dumps({**raw, **mutate}))
    bad_pmf = {**raw, "pmf": ["1/2", "x", "1/4"]}
    with pytest.raises(io.FormatError):
        io.to_univariate(io.parse(json.dumps(bad_pmf)))
