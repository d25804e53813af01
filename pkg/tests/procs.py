"""Run the gNB and xApp as separate processes over loopback."""

import re
import subprocess
import sys

CLI = [sys.executable, "-m", "rrcguard.cli"]


def cli(*args, timeout=120):
    return subprocess.run([*CLI, *map(str, args)], capture_output=True, text=True,
                          timeout=timeout)


def serve_pair(outdir, preset="attack-1mue", seed=7, time_scale=0, timeout=120):
    gnb = subprocess.Popen([*CLI, "serve-gnb", "--port", "0", "--preset", preset,
                            "--seed", str(seed), "--time-scale", str(time_scale),
                            "--wait-s", "30", "--output-dir", str(outdir)],
                           stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    try:
        line = gnb.stdout.readline()
        m = re.match(r"listening on ([\d.]+):(\d+)", line)
        if not m:
            gnb.kill()
            raise RuntimeError(f"gNB did not start: {line!r} {gnb.stderr.read()}")
        xapp = subprocess.run([*CLI, "serve-xapp", "--host", m.group(1), "--port", m.group(2)],
                              capture_output=True, text=True, timeout=timeout)
        out, err = gnb.communicate(timeout=timeout)
    finally:
        if gnb.poll() is None:
            gnb.kill()
    return gnb.returncode, line + out, err, xapp
