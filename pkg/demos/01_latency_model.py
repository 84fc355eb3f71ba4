"""
Anatomy of one placement's latency
==================================

Builds a single node and task by hand and walks the three latency
components: wireless upload of the task's input data, container image
download (skipped when the image is already cached), and compute time.
"""

import numpy as np

from edgesched.latency import (
    ChannelParams,
    channel_gain,
    comm_latency,
    comp_latency,
    dbm_to_watts,
    download_latency,
    noise_power_w,
    snr,
    uplink_rate,
)
from edgesched.records import DownloadJob, ImageRecord, NodeRecord, TaskRecord

# an edge node: 16 cores, 20 GHz, 100 Mb/s uplink, sitting at the origin
node = NodeRecord(
    id=0, cpu_cores=16.0, mem_gb=32.0, storage_gbit=50.0,
    freq_ghz=20.0, bandwidth_mbps=100.0, position=(0.0, 0.0),
)

# a task 50 m away: 2 cores, 30 gigacycles of work, 50 Mb of input data
task = TaskRecord(
    id=0, cpu_cores=2.0, mem_gb=4.0, work_gcycles=30.0, data_mbit=50.0,
    image_id=1, position=(30.0, 40.0), arrival_s=0.0,
    tx_power_w=dbm_to_watts(23.0),
)
image = ImageRecord(id=1, size_gbit=2.0)

channel = ChannelParams(
    tx_power_w=task.tx_power_w,
    noise_w=noise_power_w(-174.0, node.bandwidth_mbps),
    path_loss_exponent=4.0,
)

distance = float(np.hypot(task.position[0] - node.position[0],
                          task.position[1] - node.position[1]))
gain = channel_gain(distance, channel.path_loss_exponent)
ratio = snr(channel.tx_power_w, gain, channel.noise_w)
print(f"distance {distance:.0f} m, channel gain {gain:.3e}, SNR {ratio:.1f}")

# the uplink is shared: every task still uploading on this node splits the band
for sharers in (1, 2, 4):
    rate = uplink_rate(node.bandwidth_mbps, sharers, ratio)
    t_comm = comm_latency(task.data_mbit, rate)
    print(f"{sharers} concurrent upload(s): rate {rate:8.1f} Mb/s, "
          f"comm {t_comm * 1e3:.3f} ms")

# image download: cached -> free, cold -> full transfer behind the queue
t_cold = download_latency(node, image)
node.cached_images.add(image.id)
t_warm = download_latency(node, image)
node.cached_images.clear()
node.download_queue.append(DownloadJob(image_id=9, remaining_gbit=1.0, size_gbit=1.0))
t_queued = download_latency(node, image)
print(f"download: cold {t_cold:.1f} s, cached {t_warm:.1f} s, "
      f"cold behind a 1 Gb pull {t_queued:.1f} s")

t_comp = comp_latency(task.work_gcycles, node.freq_ghz)
print(f"compute: {task.work_gcycles:.0f} gigacycles / {node.freq_ghz:.0f} GHz "
      f"= {t_comp:.2f} s")

rate = uplink_rate(node.bandwidth_mbps, 1, ratio)
total = comm_latency(task.data_mbit, rate) + t_cold + t_comp
print(f"cold-start total: {total:.2f} s (download dominates)")
