"""Smoke test for the speechaug extension module.

Build first with `cargo build -p speechaug-python --release`. The script
copies the shared library next to a temporary import path under the name
Python expects, so no packaging tool is needed.
"""

import json
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module(workdir: Path):
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libspeechaug_py.so", "libspeechaug_py.dylib", "speechaug_py.dll")
    ]
    lib = next((c for c in candidates if c.exists()), None)
    if lib is None:
        sys.exit("extension not built: run `cargo build -p speechaug-python --release`")
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    shutil.copy(lib, workdir / f"speechaug{suffix}")
    sys.path.insert(0, str(workdir))
    import speechaug

    return speechaug


def tone(sa, freq, seconds, rate):
    n = int(seconds * rate)
    return sa.AudioBuffer([0.4 * math.sin(2 * math.pi * freq * i / rate) for i in range(n)], rate)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        sa = load_module(tmp)

        buf = tone(sa, 220.0, 1.0, 16000)
        assert len(buf) == 16000 and buf.sample_rate_hz == 16000

        fast = sa.speed_perturb(buf, 1.1)
        assert len(fast) == 14545, len(fast)
        slow = sa.tempo_perturb(buf, 0.9)
        assert abs(len(slow) - 16000 / 0.9) <= 512
        warped = sa.vtlp_perturb(buf, 1.1)
        assert len(warped) == len(buf)
        assert abs(sa.warp_frequency(1000.0, 1.1, 8000.0) - 1100.0) < 1e-9

        assert sa.best_shift([0.0, 0.0, 1.0, 2.0, 1.0, 0.0], [1.0, 2.0, 1.0], 1) == 1
        assert sa.factor_set("4x") == [0.9, 0.95, 1.05, 1.1]

        wav = tmp / "tone.wav"
        sa.write_wav(buf, str(wav))
        back = sa.read_wav(str(wav))
        assert max(abs(a - b) for a, b in zip(buf.samples, back.samples)) <= 1 / 32768

        try:
            sa.speed_perturb(buf, 5.0)
        except sa.SpeechAugError as e:
            assert "factor" in str(e)
        else:
            raise AssertionError("out-of-range factor accepted")

        ctm = tmp / "a.ctm"
        ctm.write_text(
            "CM01_B1_UW1_M2 1 0.0 0.10 ah\nCM01_B1_UW1_M2 1 0.1 0.10 b\n"
            "M05_B1_UW1_M2 1 0.0 0.40 ah\nM05_B1_UW1_M2 1 0.4 0.30 sil\n"
        )
        assert sa.factors_from_ctm(str(ctm)) == {"M05": 0.25}

        manifest = tmp / "manifest.jsonl"
        record = {
            "utterance_id": "M05_B1_UW1",
            "speaker_id": "M05",
            "group": "DYS",
            "audio_path": str(wav),
            "duration": 1.0,
        }
        manifest.write_text(json.dumps(record) + "\n")
        written, failed = sa.augment_manifest(str(manifest), "speed", "2x", str(tmp / "out"), 2)
        assert (written, failed) == (2, []), (written, failed)
        summary = sa.summarize(str(manifest))
        assert abs(summary["total_hours"] - 1 / 3600) < 1e-12

        assert sa.gradient_check(0, 0.5) < 1e-4
        losses = sa.train_synthetic(seed=1, epochs=4)
        assert len(losses) == 4 and losses[-1] < losses[0], losses

    print("python smoke test passed")


if __name__ == "__main__":
    main()
