import csv
import io

import pytest

from gridforge import auth
from gridforge.cli import EXIT_AUTH, EXIT_INTERNAL, EXIT_OK, EXIT_SCENARIO, EXIT_USAGE, main
from gridforge.report import COMPARE_COLUMNS, read_sections

SCENARIO = """\
[params]
granularity_s|3
[users]
admin|admin.priv
alice|alice.priv
[resources]
R1|0|10|100|100|admin
R2|1|20|150|200|admin
R3|2|30|200|300|admin
[clusters]
CA|R1,R2
CB|R3
[jobs]
alice|10|20
alice|15|30
alice|20|40|admin
"""


@pytest.fixture
def keydir(tmp_path, keys):
    d = tmp_path / "keys"
    d.mkdir()
    auth.write_keypair(d, "admin", keys[0])
    auth.write_keypair(d, "alice", keys[1])
    return d


def write(tmp_path, text, name="scenario.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_compare_builtin(tmp_path):
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--scenario", "builtin:paper-r16", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert list(rows[0]) == COMPARE_COLUMNS
    assert [int(r["jobs"]) for r in rows] == [3, 5, 8, 10, 14]
    assert "\r" not in out.read_text()


def test_compare_single_level(capsys):
    assert main(["compare", "--scenario", "builtin:paper-r16", "--job-counts", "1"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and lines[1].startswith("1,")


def test_compare_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["compare", "--scenario", "builtin:paper-r16", "--out", str(a)])
    main(["compare", "--scenario", "builtin:paper-r16", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_run_builtin_with_generated_jobs(tmp_path):
    out = tmp_path / "run.csv"
    code = main(["run", "--scenario", "builtin:paper-r16", "--generate-jobs", "5", "--out", str(out)])
    assert code == EXIT_OK
    report = read_sections(out.read_text())
    assert len(report["groups"]) >= 1
    for row in report["groups"]:
        assert (row["cond_i"], row["cond_ii"], row["cond_iii"]) == ("ok", "ok", "ok")
    assert len(report["resources"]) == 16
    assert report["rejected"] == []


def test_run_rejects_wrong_key(tmp_path, keydir):
    out = tmp_path / "run.csv"
    path = write(tmp_path, SCENARIO)
    code = main(["run", "--scenario", str(path), "--keydir", str(keydir), "--out", str(out)])
    assert code == EXIT_AUTH
    report = read_sections(out.read_text())
    grouped = {m for row in report["groups"] for m in row["members"].split(";")}
    assert grouped == {"J1", "J2"}
    assert report["rejected"] == [{"job_id": "J3", "user": "alice", "reason": "bad-signature"}]


def test_run_djg_flags_memory(tmp_path):
    text = SCENARIO.replace("alice|10|20\nalice|15|30\nalice|20|40|admin", "alice|10|150\nalice|10|150")
    path = write(tmp_path, text.replace("admin.priv", "").replace("alice.priv", ""))
    out = tmp_path / "run.csv"
    assert main(["run", "--scenario", str(path), "--algorithm", "djg", "--out", str(out)]) == EXIT_OK
    report = read_sections(out.read_text())
    assert any(row["cond_ii"] == "violated" for row in report["groups"])


def test_overrides(tmp_path):
    out = tmp_path / "run.csv"
    args = ["run", "--scenario", "builtin:paper-r16", "--generate-jobs", "3", "--out", str(out)]
    main(args + ["--overhead", "0", "--granularity", "6", "--tcomm", "6"])
    report = read_sections(out.read_text())
    assert all(float(r["overhead_s"]) == 0.0 for r in report["groups"])
    # R1 can hold 60 MI with a 6 s window: jobs of 20 and 27 share it
    assert report["groups"][0]["members"] == "J1;J2"
    assert main(args + ["--granularity", "-1"]) == EXIT_SCENARIO


def test_missing_key_file(tmp_path):
    path = write(tmp_path, SCENARIO)
    assert main(["run", "--scenario", str(path), "--keydir", str(tmp_path / "none")]) == EXIT_SCENARIO


def test_scenario_errors(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "absent.txt")]) == EXIT_SCENARIO
    bad = write(tmp_path, SCENARIO.replace("alice|15|30", "carol|15|30"), "bad.txt")
    assert main(["run", "--scenario", str(bad)]) == EXIT_SCENARIO
    assert "job 2: unknown user carol" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [[], ["run"], ["frobnicate"], ["compare", "--scenario", "builtin:paper-r16", "--job-counts", "a,b"],
     ["run", "--scenario", "x", "--algorithm", "fifo"]],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_USAGE


class TestKeygen:
    def test_writes_pair(self, tmp_path):
        assert main(["keygen", "alice", "1024", "--keydir", str(tmp_path)]) == EXIT_OK
        kp = auth.load_private_key(tmp_path / "alice.priv")
        pub = auth.load_public_key(tmp_path / "alice.pub")
        digest = auth.get_hash(b"hello")
        assert auth.verify_signature(digest, auth.create_signature(digest, kp.private_part), pub)
        assert kp.bits == 1024

    def test_refuses_overwrite(self, tmp_path):
        main(["keygen", "alice", "1024", "--keydir", str(tmp_path)])
        before = (tmp_path / "alice.priv").read_bytes()
        assert main(["keygen", "alice", "1024", "--keydir", str(tmp_path)]) == EXIT_USAGE
        assert (tmp_path / "alice.priv").read_bytes() == before
        assert main(["keygen", "alice", "1024", "--keydir", str(tmp_path), "--force"]) == EXIT_OK
        assert (tmp_path / "alice.priv").read_bytes() != before

    def test_default_bits_and_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GRIDFORGE_KEYDIR", str(tmp_path))
        assert main(["keygen", "bob"]) == EXIT_OK
        assert auth.load_private_key(tmp_path / "bob.priv").bits == 2048

    def test_unwritable_destination(self, tmp_path):
        # tests may run as root, where chmod cannot make a directory read-only
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["keygen", "alice", "1024", "--keydir", str(blocker)]) == EXIT_INTERNAL

    def test_bad_bits(self, tmp_path):
        assert main(["keygen", "alice", "999", "--keydir", str(tmp_path)]) == EXIT_USAGE
