"""Command-line interface: subcommands, config handling, exit codes."""

import json

import numpy as np

from rcpolar.cli import dump_config, load_config, main
from rcpolar.construction import ReliabilityProfile
from rcpolar.puncturing import (
    ErasureDesign,
    PuncturingSequence,
    exhaustive_search,
    reference_base32_sequence,
)
from rcpolar.polar import PolarCodeSpec


class TestConfigHandling:
    def test_round_trip_identity(self, tmp_path):
        cfg = {"n": 6, "method": "ga", "design_snr_db": 3.5, "out": "x.csv",
               "snrs": [1.0, 2.0], "seed": 7}
        text = dump_config(cfg)
        path = tmp_path / "c.json"
        path.write_text(text)
        back = load_config(str(path), {})
        assert back == cfg
        assert dump_config(back) == text

    def test_flags_override_config(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"n": 4, "seed": 1}))
        cfg = load_config(str(path), {"seed": 2, "method": "ga"})
        assert cfg == {"n": 4, "seed": 2, "method": "ga"}

    def test_missing_config_file(self):
        assert main(["construct", "--config", "/nonexistent.json"]) == 2


class TestConstruct:
    def test_ga_profile_rows(self, tmp_path):
        out = tmp_path / "prof.csv"
        rc = main(["construct", "--n", "8", "--method", "ga",
                   "--design-snr-db", "3.5", "--out", str(out)])
        assert rc == 0
        prof = ReliabilityProfile.from_csv(out)
        assert len(prof) == 256
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("# seed=")
        assert lines[2] == "index,mean_llr,error_prob"
        idx = [int(l.split(",")[0]) for l in lines[3:]]
        assert idx == list(range(1, 257))

    def test_bec_matches_recursion_example(self, tmp_path):
        out = tmp_path / "prof.csv"
        rc = main(["construct", "--n", "2", "--method", "bec",
                   "--epsilon", "0.5", "--out", str(out)])
        assert rc == 0
        prof = ReliabilityProfile.from_csv(out)
        assert np.allclose(prof.error_prob, [0.9375, 0.5625, 0.4375, 0.0625])

    def test_invalid_n_names_field(self, tmp_path, capsys):
        rc = main(["construct", "--n", "0", "--method", "ga",
                   "--design-snr-db", "3.5", "--out", str(tmp_path / "x.csv")])
        assert rc == 2
        assert "'n'" in capsys.readouterr().err

    def test_missing_out(self, capsys):
        rc = main(["construct", "--n", "4", "--method", "ga",
                   "--design-snr-db", "3.5"])
        assert rc == 2
        assert "'out'" in capsys.readouterr().err

    def test_mc_profile(self, tmp_path):
        out = tmp_path / "mc.csv"
        rc = main(["construct", "--n", "4", "--method", "mc", "--snr-db", "3.0",
                   "--trials", "2000", "--seed", "3", "--out", str(out)])
        assert rc == 0
        prof = ReliabilityProfile.from_csv(out)
        assert len(prof) == 16
        assert prof.method == "monte_carlo"


class TestPuncture:
    def test_reference_reproduction(self, tmp_path):
        out = tmp_path / "seq.txt"
        rc = main(["puncture", "--base-len", "32", "--k", "11",
                   "--design-snr-db", "3.5", "--out", str(out)])
        assert rc == 0
        got = PuncturingSequence.load(out)
        assert got.order == reference_base32_sequence().order

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for out in (a, b):
            assert main(["puncture", "--base-len", "32", "--k", "11",
                         "--design-snr-db", "3.5", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bec_matches_exhaustive(self, tmp_path):
        out = tmp_path / "seq4.txt"
        rc = main(["puncture", "--base-len", "4", "--k", "2",
                   "--epsilon", "0.5", "--out", str(out)])
        assert rc == 0
        seq = PuncturingSequence.load(out)
        design = ErasureDesign(epsilon=0.5)
        spec1 = PolarCodeSpec(n=2, k=4, info_set=(1, 2, 3, 4), split=(2, 0))
        from rcpolar.construction import bhattacharyya_bec, select_information_set
        from rcpolar.puncturing import evaluate_pattern
        prof = bhattacharyya_bec(spec1, np.full(4, 0.5))
        info = select_information_set(prof, 2)
        spec = PolarCodeSpec(n=2, k=2, info_set=info, split=(2, 0))
        for m in (1, 2, 3):
            opt = exhaustive_search(spec, design, m)
            assert evaluate_pattern(spec, design, seq.pattern(m)) <= \
                evaluate_pattern(spec, design, opt) * (1 + 1e-12)

    def test_bad_base_len(self, capsys):
        rc = main(["puncture", "--base-len", "33", "--k", "11",
                   "--design-snr-db", "3.5", "--out", "/tmp/x.txt"])
        assert rc == 2
        assert "'base_len'" in capsys.readouterr().err


class TestSimulate:
    def test_smoke_csv(self, tmp_path):
        out = tmp_path / "res.csv"
        rc = main(["simulate", "--n", "6", "--k", "32", "--L", "64",
                   "--snr-start", "2.0", "--snr-stop", "4.0", "--snr-step", "1.0",
                   "--design-snr-db", "3.5", "--seed", "11",
                   "--max-blocks", "200", "--target-block-errors", "1000000",
                   "--batch-size", "100", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("# seed=11")
        header = "snr_db,blocks,bit_errors,block_errors,ber,bler,t_bar,throughput"
        assert header in lines
        data = [l for l in lines if not l.startswith("#") and l != header]
        assert len(data) == 3

    def test_cc_ir_same_schema(self, tmp_path):
        heads = {}
        for mode in ("cc", "ir"):
            out = tmp_path / f"{mode}.csv"
            rc = main(["simulate", "--n", "5", "--k", "11", "--L", "32",
                       "--mode", mode, "--t", "2",
                       "--snr-start", "3.0", "--snr-stop", "3.0", "--snr-step", "1.0",
                       "--design-snr-db", "3.5", "--seed", "1",
                       "--max-blocks", "100", "--batch-size", "50",
                       "--out", str(out)])
            assert rc == 0
            heads[mode] = [l for l in out.read_text().split("\n") if "," in l][0]
        assert heads["cc"] == heads["ir"]

    def test_missing_out(self, capsys):
        rc = main(["simulate", "--n", "5", "--k", "11", "--L", "32",
                   "--snr-start", "1.0", "--snr-stop", "1.0", "--snr-step", "1.0",
                   "--design-snr-db", "3.5"])
        assert rc == 2
        assert "'out'" in capsys.readouterr().err

    def test_profile_input(self, tmp_path):
        prof_path = tmp_path / "prof.csv"
        assert main(["construct", "--n", "5", "--method", "ga",
                     "--design-snr-db", "3.5", "--out", str(prof_path)]) == 0
        out = tmp_path / "res.csv"
        rc = main(["simulate", "--n", "5", "--k", "11", "--L", "32",
                   "--profile", str(prof_path),
                   "--snr-start", "3.0", "--snr-stop", "3.0", "--snr-step", "1.0",
                   "--seed", "2", "--max-blocks", "100", "--batch-size", "50",
                   "--out", str(out)])
        assert rc == 0

    def test_seed_echoed_and_deterministic(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert main(["simulate", "--n", "5", "--k", "11", "--L", "32",
                         "--snr-start", "2.0", "--snr-stop", "2.0", "--snr-step", "1.0",
                         "--design-snr-db", "3.5", "--seed", "123",
                         "--max-blocks", "100", "--batch-size", "50",
                         "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
