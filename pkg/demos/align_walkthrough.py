#!/usr/bin/env python3
"""Align a typed transcript against recognizer word timings, step by step."""

from pangea import demo
from pangea.align import align_transcript, dtw_align, tokenize
from pangea.asr import MockTranscriber

wav = demo.demo_wav_bytes()
asr = MockTranscriber(words=demo.demo_words())

manual = demo.DEMO_INSTRUCTION
print(f"manual transcript: {manual!r}")
print(f"tokens: {[t.text for t in tokenize(manual)]}")

auto = asr.transcribe(wav)
print("\nrecognizer output:")
for t in auto:
    print(f"  {t.start_ms:6d}..{t.end_ms:6d}  {t.token.text}")

path, cost = dtw_align(auto, tokenize(manual))
print(f"\nwarp cost {cost:.3f} over {len(path.steps)} steps")

aligned = align_transcript(wav, manual, asr)
print("\ntimed manual tokens:")
for t in aligned.tokens:
    print(f"  {t.start_ms:6d}..{t.end_ms:6d}  {t.token.original}")

# now with a recognizer that misheard two words: the timestamps survive
words = demo.demo_words()
words[3]["word"] = "chicken"
words[7]["word"] = "hat"
noisy = align_transcript(wav, manual, MockTranscriber(words=words))
print("\nsame transcript, recognizer misheard two words:")
for t in noisy.tokens:
    print(f"  {t.start_ms:6d}..{t.end_ms:6d}  {t.token.original}")
