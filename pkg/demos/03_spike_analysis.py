"""
Counting spikes in a logger export
==================================

The bundled logger fixture holds four differential channels over 90 minutes
at 1 Hz. Find peaks with prominence >= 0.03 mV and count them in the three
30-minute windows around the stimulus.

    python3 demos/03_spike_analysis.py
"""
import numpy as np

from mycosim import data
from mycosim.spikes import count_in_windows, detect_spikes, inter_spike_intervals, load_logger_csv, parse_windows

channels = load_logger_csv(data.path(data.LOGGER_FIXTURE))
windows = parse_windows("before=0:1800,during=1800:3600,after=3600:5400")

report = None
for ch in channels:
    train = detect_spikes(ch.values, 0.03, times=ch.times, source=ch.label)
    report = count_in_windows(train, windows, report)
    isi = inter_spike_intervals(train)
    print(f"{ch.label}: {len(train.spike_times)} spikes, "
          f"amplitude {np.mean(train.prominences):.3f} mV mean prominence, "
          f"median ISI {np.median(isi) if isi.size else float('nan'):.0f} s")

print()
print("channel   " + "  ".join(f"{w:>7}" for w in report.labels))
for label, counts in report.rows.items():
    print(f"{label:9} " + "  ".join(f"{c:7d}" for c in counts))

# same channel, stricter threshold: fewer spikes survive
ch = channels[0]
for thr in (0.03, 0.05, 0.07):
    print(f"{ch.label} prominence >= {thr}: {len(detect_spikes(ch.values, thr).spike_times)} spikes")
