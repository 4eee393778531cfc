import json

import numpy as np
import pytest

from alphaproj import example_family, make_distribution, uniform
from alphaproj.cli import EXIT_CERT, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from alphaproj.families import LinearFamilySpec
from alphaproj.instances import families_through, random_distribution, random_exp_family
from alphaproj import forward_project

L4 = ["1", "2", "3", "4"]


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)

    return write


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_divergence_examples(files, capsys):
    q = files("u.json", uniform(L4).to_json())
    p = files("p.json", make_distribution(L4, [0.9, 0.1, 0, 0]).to_json())
    code, out, _ = run(capsys, ["divergence", "--kind", "renyi", "--alpha", "0.5", "--p", p, "--q", q])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["kind"] == "renyi" and abs(doc["value_nats"] - 0.916291) <= 1e-6
    code, out, _ = run(capsys, ["divergence", "--kind", "tv", "--p", p, "--q", p])
    assert code == EXIT_OK and json.loads(out)["value_nats"] == 0
    code, out, _ = run(capsys, ["divergence", "--kind", "kl", "--p", q, "--q", p])
    assert code == EXIT_OK and json.loads(out)["value_nats"] == "inf"
    code, _, err = run(capsys, ["divergence", "--kind", "renyi", "--alpha", "-1", "--p", p, "--q", q])
    assert code == EXIT_USAGE and err


def test_usage_errors(files, tmp_path, capsys):
    q = files("u.json", uniform(L4).to_json())
    fam = files("f.json", example_family(0.5).to_json())
    assert run(capsys, ["divergence", "--kind", "renyi", "--alpha", "0.5", "--p", str(tmp_path / "nope.json"), "--q", q])[0] == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, ["divergence", "--kind", "tv", "--p", str(bad), "--q", q])[0] == EXIT_USAGE
    for a in ("0", "inf"):
        assert run(capsys, ["project", "forward", "--alpha", a, "--q", q, "--family", fam])[0] == EXIT_USAGE
    assert run(capsys, ["project", "iterate", "--alpha", "0.5", "--q", q, "--families", fam, fam])[0] == EXIT_USAGE
    assert run(capsys, ["project", "iterate", "--alpha", "2", "--q", q, "--families", fam])[0] == EXIT_USAGE
    assert run(capsys, ["verify", "pythagorean", "--instances", "0"])[0] == EXIT_USAGE
    assert run(capsys, ["frobnicate"])[0] == EXIT_USAGE


def test_project_forward_example(files, capsys):
    q = files("u.json", uniform(L4).to_json())
    fam = files("f.json", example_family(0.5).to_json())
    code, out, err = run(capsys, ["project", "forward", "--alpha", "0.5", "--q", q, "--family", fam, "--trace"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert np.max(np.abs(np.array(doc["minimizer"]["probs"]) - [0.9, 0.1, 0, 0])) <= 1e-6
    assert set(doc) >= {"minimizer", "theta", "normalizer", "divergence_nats", "residual", "iterations", "flags", "trace"}
    assert doc["flags"]["kkt_clipping_ok"] is True
    assert doc["flags"]["support_equals_family_support"] is False
    assert err.startswith("iter residual divergence")
    # traces never reach the result stream
    assert "iter residual" not in out


def test_project_zero_constraint_family(files, capsys):
    Q = random_distribution(np.random.default_rng(4), 5, floor=0.01)
    q = files("q.json", Q.to_json())
    fam = files("f.json", {"alphabet": list(Q.alphabet), "constraints": []})
    code, out, _ = run(capsys, ["project", "forward", "--alpha", "2", "--q", q, "--family", fam])
    doc = json.loads(out)
    assert code == EXIT_OK and doc["divergence_nats"] == 0
    assert doc["minimizer"]["probs"] == pytest.approx(list(Q.probs), abs=1e-15)


def test_project_iterate(files, capsys):
    rng = np.random.default_rng(11)
    member = random_distribution(rng, 5, floor=0.02)
    f1, f2 = families_through(rng, member, 1.5, 2)
    Q = random_distribution(rng, 5, floor=0.02)
    args = ["project", "iterate", "--alpha", "1.5", "--q", files("q.json", Q.to_json()),
            "--families", files("f1.json", f1.to_json()), files("f2.json", f2.to_json()), "--trace"]
    code, out, _ = run(capsys, args)
    assert code == EXIT_OK
    doc = json.loads(out)
    direct = forward_project(Q, f1.intersect(f2)).minimizer.probs
    assert np.max(np.abs(np.array(doc["minimizer"]["probs"]) - direct)) <= 1e-6
    assert doc["steps"]


def test_project_reverse_and_tsallis(files, capsys):
    rng = np.random.default_rng(5)
    fam = random_exp_family(rng, 4, 2.0, 1)
    P_hat = random_distribution(rng, 4, floor=0.05)
    code, out, _ = run(capsys, ["project", "reverse", "--alpha", "2", "--p-hat", files("p.json", P_hat.to_json()),
                                "--exp-family", files("e.json", fam.to_json())])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert {"eta", "shifted_family", "divergence_from_data_nats", "flags"} <= set(doc)
    code, out, _ = run(capsys, ["project", "tsallis", "--alpha", "2", "--energies", "0", "1", "2", "3", "--target", "1.2"])
    assert code == EXIT_OK and abs(json.loads(out)["escort_mean"] - 1.2) <= 1e-9
    assert run(capsys, ["project", "tsallis", "--alpha", "2", "--energies", "0", "1", "--target", "5"])[0] == EXIT_USAGE


def test_certificate_failure_exit(files, capsys):
    rng = np.random.default_rng(2)
    Q = random_distribution(rng, 4, floor=0.05)
    fam = LinearFamilySpec(2.0, L4, [[1.0, -1.0, 0.5, -0.5]])
    argv = ["project", "forward", "--alpha", "2", "--q", files("q.json", Q.to_json()),
            "--family", files("f.json", fam.to_json()), "--certificate-tolerance", "-1"]
    code, out, err = run(capsys, argv)
    assert code == EXIT_CERT and "certificate failed" in err
    assert json.loads(out)["minimizer"]


def test_solver_failure_exit(files, capsys):
    Q = uniform(L4)
    argv = ["project", "forward", "--alpha", "2", "--q", files("q.json", Q.to_json()),
            "--family", files("f.json", LinearFamilySpec(2.0, L4, [[1, 2, 3, 4]]).to_json())]
    code, out, err = run(capsys, argv)
    assert code == EXIT_FAIL and out == "" and err


def test_output_is_deterministic(files, tmp_path, capsys, monkeypatch):
    q = files("u.json", uniform(L4).to_json())
    fam = files("f.json", example_family(0.5).to_json())
    argv = ["project", "forward", "--alpha", "0.5", "--q", q, "--family", fam, "--certificate-samples", "40"]
    first = run(capsys, argv + ["--seed", "9"])[1]
    assert run(capsys, argv + ["--seed", "9"])[1] == first
    monkeypatch.setenv("ALPHA_PROJ_SEED", "9")
    assert run(capsys, argv)[1] == first
    out = tmp_path / "r.json"
    assert main(argv + ["--seed", "9", "--output", str(out)]) == EXIT_OK
    assert out.read_text() == first
    monkeypatch.setenv("ALPHA_PROJ_SEED", "x")
    assert run(capsys, argv)[0] == EXIT_USAGE


def test_verify_subcommand(capsys):
    code, out, err = run(capsys, ["verify", "apollonius", "--instances", "200", "--seed", "7"])
    doc = json.loads(out)
    assert code == EXIT_OK and doc["failed"] == 0 and doc["worst_residual"] <= 1e-10
    assert "passed" in err
    code, out, _ = run(capsys, ["verify", "pinsker", "--instances", "200", "--seed", "7"])
    assert code == EXIT_OK
    again = run(capsys, ["verify", "pinsker", "--instances", "200", "--seed", "7"])[1]
    assert again == out
