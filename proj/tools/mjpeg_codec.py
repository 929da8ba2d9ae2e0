#!/usr/bin/env python3
"""Bitrate-targeted MJPEG round trip for raw yuv444p/rgb24 sequences.

encode: per frame, picks the highest JPEG quality whose encoded size fits the
per-frame byte budget (bitrate * 1000 / (8 * fps)), then appends the JPEG
blobs back to back. decode: splits the stream on JPEG end markers and writes
the frames back as raw video. Quality search and libjpeg output are
deterministic, so identical inputs give identical streams.
"""

import argparse
import io
import os
import sys

from PIL import Image

QUALITY_MIN = 2
QUALITY_MAX = 95


def parse_size(text):
    w, _, h = text.partition("x")
    try:
        w, h = int(w), int(h)
    except ValueError:
        raise SystemExit(f"bad --size '{text}', expected WxH")
    if w <= 0 or h <= 0:
        raise SystemExit(f"bad --size '{text}', expected positive WxH")
    return w, h


def frame_to_image(data, width, height, pix_fmt):
    if pix_fmt == "rgb24":
        return Image.frombytes("RGB", (width, height), data)
    plane = width * height
    y = Image.frombytes("L", (width, height), data[:plane])
    u = Image.frombytes("L", (width, height), data[plane:2 * plane])
    v = Image.frombytes("L", (width, height), data[2 * plane:])
    return Image.merge("YCbCr", (y, u, v))


def image_to_frame(img, pix_fmt):
    if pix_fmt == "rgb24":
        return img.convert("RGB").tobytes()
    if img.mode != "YCbCr":
        img = img.convert("YCbCr")
    y, u, v = img.split()
    return y.tobytes() + u.tobytes() + v.tobytes()


def encode_jpeg(img, quality):
    buf = io.BytesIO()
    img.save(buf, format="JPEG", quality=quality, subsampling=0)
    return buf.getvalue()


def fit_to_budget(img, budget):
    """Largest quality in [QUALITY_MIN, QUALITY_MAX] whose blob fits; the
    minimum quality is used even when it overshoots."""
    best = encode_jpeg(img, QUALITY_MIN)
    lo, hi = QUALITY_MIN + 1, QUALITY_MAX
    while lo <= hi:
        mid = (lo + hi) // 2
        blob = encode_jpeg(img, mid)
        if len(blob) <= budget:
            best = blob
            lo = mid + 1
        else:
            hi = mid - 1
    return best


def run_encode(args):
    width, height = parse_size(args.size)
    frame_bytes = 3 * width * height
    budget = int(args.bitrate * 1000 / (8 * args.fps))

    with open(args.input, "rb") as f:
        raw = f.read()
    if not raw or len(raw) % frame_bytes != 0:
        raise SystemExit(f"{args.input}: size is not a whole number of {frame_bytes}-byte frames")

    out = bytearray()
    for off in range(0, len(raw), frame_bytes):
        img = frame_to_image(raw[off:off + frame_bytes], width, height, args.format)
        out += fit_to_budget(img, budget)

    tmp = args.output + ".tmp"
    with open(tmp, "wb") as f:
        f.write(out)
    os.replace(tmp, args.output)


def split_jpegs(data):
    frames = []
    pos = 0
    while pos < len(data):
        if data[pos:pos + 2] != b"\xff\xd8":
            raise SystemExit(f"stream corrupt at byte {pos}: no JPEG start marker")
        end = data.find(b"\xff\xd9", pos + 2)
        if end < 0:
            raise SystemExit("stream corrupt: unterminated JPEG")
        frames.append(data[pos:end + 2])
        pos = end + 2
    return frames


def run_decode(args):
    width, height = parse_size(args.size)
    with open(args.input, "rb") as f:
        data = f.read()

    out = bytearray()
    for blob in split_jpegs(data):
        img = Image.open(io.BytesIO(blob))
        if args.format != "rgb24":
            img.draft("YCbCr", img.size)
        img.load()
        if img.size != (width, height):
            raise SystemExit(f"frame is {img.size[0]}x{img.size[1]}, expected {width}x{height}")
        out += image_to_frame(img, args.format)

    tmp = args.output + ".tmp"
    with open(tmp, "wb") as f:
        f.write(out)
    os.replace(tmp, args.output)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="raw video to concatenated JPEG stream")
    enc.add_argument("--input", required=True)
    enc.add_argument("--output", required=True)
    enc.add_argument("--size", required=True)
    enc.add_argument("--format", choices=["yuv444p", "rgb24"], default="yuv444p")
    enc.add_argument("--fps", type=float, default=25.0)
    enc.add_argument("--bitrate", type=int, required=True, help="target kbps")
    enc.set_defaults(func=run_encode)

    dec = sub.add_parser("decode", help="concatenated JPEG stream back to raw video")
    dec.add_argument("--input", required=True)
    dec.add_argument("--output", required=True)
    dec.add_argument("--size", required=True)
    dec.add_argument("--format", choices=["yuv444p", "rgb24"], default="yuv444p")
    dec.set_defaults(func=run_decode)

    args = parser.parse_args()
    if args.command == "encode" and (args.bitrate <= 0 or args.fps <= 0):
        raise SystemExit("--bitrate and --fps must be positive")
    args.func(args)


if __name__ == "__main__":
    sys.exit(main())
