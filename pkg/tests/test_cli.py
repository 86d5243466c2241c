from pathlib import Path

from mpf_lab.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_solve_coeffs_stdout(capsys):
    code, out, err = run_cli(["solve-coeffs", "--set", "steps=4,13,17"], capsys)
    assert code == 0
    assert out.startswith("# mpf-lab schema v1")
    assert "2.778846153846e+00" in out


def test_unknown_key_is_config_error(capsys):
    code, _, err = run_cli(["solve-coeffs", "--set", "nope=1"], capsys)
    assert code == 2
    assert "unknown config key" in err


def test_bad_value_is_config_error(capsys):
    code, _, err = run_cli(["mpf-sweep", "--set", "t_scale=banana",
                            "--set", "n=4", "--set", "bounds=off"], capsys)
    assert code == 2


def test_malformed_override(capsys):
    code, _, err = run_cli(["solve-coeffs", "--set", "oops"], capsys)
    assert code == 2


def test_resource_cap_exit_code(capsys):
    # the mixture bound caps dense evaluation at 8 qubits
    code, _, err = run_cli(["bound-eval", "--set", "n=9", "--set", "t_count=1"], capsys)
    assert code == 3
    assert "resource" in err.lower() or "capped" in err.lower()


def test_missing_config_file(capsys):
    code, _, err = run_cli(["solve-coeffs", "--config", "/nonexistent/x.cfg"], capsys)
    assert code == 2


def test_config_file_and_out(tmp_path: Path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\np = 2\nsteps = 8,26,34\neven_powers = true\n")
    out = tmp_path / "result.csv"
    code, _, _ = run_cli(["solve-coeffs", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 0
    text = out.read_text()
    assert "# even_powers = True" in text
    assert "6.128947305418e-03" in text


def test_seed_flag_overrides(tmp_path: Path, capsys):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["mpf-sweep", "--set", "n=4", "--set", "t_count=2", "--set", "bounds=off"]
    assert main(base + ["--seed", "1", "--out", str(out1)]) == 0
    assert main(base + ["--seed", "2", "--out", str(out2)]) == 0
    capsys.readouterr()
    t1, t2 = out1.read_text(), out2.read_text()
    assert "# seed = 1" in t1 and "# seed = 2" in t2
    assert t1 != t2


def test_trajectory_output(tmp_path: Path, capsys):
    traj = tmp_path / "traj.csv"
    code, out, _ = run_cli([
        "minimax-shootout", "--set", "n=4", "--set", "steps=4,10,13,15,17",
        "--set", "t0=0.5", "--set", "t_final=0.6", "--set", "dt=0.1",
        "--set", "k0=13", "--set", f"trajectory_out={traj}",
    ], capsys)
    assert code == 0
    text = traj.read_text()
    header = text.splitlines()[len(text.splitlines()) - 3]
    assert "c_1" in text and "bound_component_max" in text
    assert "l1_condition" in text


def test_byte_identical_reruns(tmp_path: Path, capsys):
    """Identical config and seed produce byte-identical CSV files."""
    args = ["minimax-shootout", "--set", "n=4", "--set", "steps=4,10,13,15,17",
            "--set", "t0=0.5", "--set", "t_final=0.8", "--set", "dt=0.1",
            "--set", "k0=13", "--seed", "77"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_custom_hamiltonian_file(tmp_path: Path, capsys):
    ham = tmp_path / "custom.txt"
    ham.write_text("# XX chain piece\n1.0 XXI\n1.0 IXX\n0.5 ZII\n")
    code, out, _ = run_cli([
        "trotter-sweep", "--set", "n=3", "--set", f"hamiltonian={ham}",
        "--set", "k_list=1,2", "--set", "t_count=2", "--set", "t_stop=1.0",
    ], capsys)
    assert code == 0
    rows = [ln for ln in out.splitlines() if ln and not ln.startswith("#")]
    assert len(rows) == 5  # header + 4 rows
    code2, _, err = run_cli([
        "trotter-sweep", "--set", "n=4", "--set", f"hamiltonian={ham}",
    ], capsys)
    assert code2 == 2
