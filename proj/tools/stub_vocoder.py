#!/usr/bin/env python3
"""Stand-in vocoder for exercising the RTF harness.

Reads the frame count from a VBMEL file, sleeps DELAY * duration seconds and
writes that much silence as 24 kHz PCM-16.

    stub_vocoder.py --in feat.mel --out out.wav [--delay 0.5] [--exit-code N]
    stub_vocoder.py --persistent [--delay 0.5]   # "<in>\t<out>" lines on stdin
"""
import argparse
import struct
import sys
import time
import wave

RATE = 24000
HOP = 300
WIN = 960


def duration_of(mel_path):
    with open(mel_path, "rb") as f:
        header = f.read(18)
    if header[:6] != b"VBMEL\0":
        raise SystemExit(f"{mel_path}: not a VBMEL file")
    n_frames = struct.unpack_from("<I", header, 10)[0]
    return ((n_frames - 1) * HOP + WIN) / RATE


def synthesize(mel_path, out_path, delay, rate):
    seconds = duration_of(mel_path)
    time.sleep(delay * seconds)
    n = int(round(seconds * rate))
    with wave.open(out_path, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(b"\0\0" * n)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--in", dest="inp")
    p.add_argument("--out")
    p.add_argument("--delay", type=float, default=0.0)
    p.add_argument("--rate", type=int, default=RATE)
    p.add_argument("--exit-code", type=int, default=0)
    p.add_argument("--no-output", action="store_true")
    p.add_argument("--persistent", action="store_true")
    args = p.parse_args()

    if args.exit_code:
        return args.exit_code
    if args.persistent:
        for line in sys.stdin:
            inp, out = line.rstrip("\n").split("\t")
            synthesize(inp, out, args.delay, args.rate)
            print(f"DONE {out}", flush=True)
        return 0
    if not args.no_output:
        synthesize(args.inp, args.out, args.delay, args.rate)
    return 0


if __name__ == "__main__":
    sys.exit(main())
