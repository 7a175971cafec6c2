"""Synthetic scenario, video, and accelerometer generators.

The smart-home layout is three rooms with one camera each; activities map
to fixed rooms and body postures. Transitions between scenario steps pass
through 4 s of walking (the person moves between rooms), during which no
room shows an activity.

Video: the active room renders its activity's blob at a class-specific
position, drifting with a class-specific velocity that loops every 16
frames; inactive rooms render dim background. Each blob is filled with a
frozen class-specific random RGB binary texture at 2 px granularity
(anchored to the blob, so it moves with it): fine high-contrast texture
drives the encoder's random conv filters across their whole response
range, which the max-pool then harvests -- solid single-color fills only
excite each filter's DC component and train far more slowly. Pixel noise,
per-activity-instance position jitter, and brightness jitter are the only
random elements, all drawn from seed-derived Philox streams, so identical
seeds reproduce identical frames. Frames are 8-bit RGB.

Acceleration: each posture has a fixed mean cosine against [0,0,1]; the
generator emits that gravity direction plus per-sample motion noise at
50 Hz. With zero noise the windowed cosine feature equals the configured
mean exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accel import (SAMPLE_RATE_HZ, WINDOW_SAMPLES, AccelTrace, GravityFilter,
                    Posture, gravity_feature, make_windows)
from .codec import (FRAME_HEIGHT, FRAME_WIDTH, SEGMENT_FRAMES, Activity,
                    VideoSegment)

ROOMS = ("bedroom", "living_room", "kitchen")

ACTIVITY_ROOM = {
    Activity.SLEEPING: "bedroom",
    Activity.RESTING: "living_room",
    Activity.DRESS_UP: "bedroom",
    Activity.EATING: "kitchen",
    Activity.CALLING: "living_room",
}

ACTIVITY_POSTURE = {
    Activity.SLEEPING: Posture.LYING,
    Activity.RESTING: Posture.SITTING,
    Activity.DRESS_UP: Posture.STANDING,
    Activity.EATING: Posture.SITTING,
    Activity.CALLING: Posture.SITTING,
}

POSTURE_MEAN_COSINE = {
    Posture.LYING: 0.05,
    Posture.SITTING: 0.60,
    Posture.STANDING: 0.95,
    Posture.WALKING: 0.85,
}

WALK_SECONDS = 4
FPS = int(SAMPLE_RATE_HZ)          # video frame rate matches the 50 Hz accel
BACKGROUND_LEVEL = 0.02            # dim gray so idle frames keep nonzero power

# per-activity blob: (row, col, height, width, row_vel, col_vel)
BLOB_SPECS = {
    Activity.SLEEPING: (10, 10, 40, 40, 0.5, 0.5),
    Activity.RESTING: (10, 62, 40, 40, 0.5, -0.5),
    Activity.DRESS_UP: (62, 10, 40, 40, -0.5, 0.5),
    Activity.EATING: (62, 62, 40, 40, -0.5, -0.5),
    Activity.CALLING: (36, 36, 40, 40, 0.0, 1.0),
}

BASE_AMPLITUDE = 0.95
TEXTURE_CELL_PX = 2

_ACCEL_STREAM = 0x41
_VIDEO_NOISE_STREAM = 0x56
_JITTER_STREAM = 0x4A
_DATASET_STREAM = 0x44
_TEXTURE_STREAM = 0x54

_texture_cache = {}


def class_texture(activity):
    """Frozen random RGB binary texture for one activity's blob.

    The texture is a fixed part of the class pattern (independent of any
    scenario seed), generated once from a per-activity Philox stream.
    """
    if activity not in _texture_cache:
        _, _, height, width, _, _ = BLOB_SPECS[activity]
        rng = _rng(_TEXTURE_STREAM, int(activity))
        cells = rng.integers(0, 2, (3,
                                    -(-height // TEXTURE_CELL_PX),
                                    -(-width // TEXTURE_CELL_PX))).astype(float)
        tex = np.repeat(np.repeat(cells, TEXTURE_CELL_PX, axis=1),
                        TEXTURE_CELL_PX, axis=2)
        _texture_cache[activity] = tex[:, :height, :width]
    return _texture_cache[activity]


@dataclass(frozen=True)
class ScenarioStep:
    activity: Activity
    duration_s: int


@dataclass(frozen=True)
class Scenario:
    """An ordered activity timeline plus generator noise settings."""

    steps: tuple
    seed: int = 0
    accel_noise_g: float = 0.05
    pixel_noise: float = 0.005
    position_jitter: int = 4

    def validate(self, min_duration_s=3):
        if not self.steps:
            raise ValueError("scenario needs at least one step")
        for i, step in enumerate(self.steps):
            if step.duration_s < min_duration_s:
                raise ValueError(
                    f"step {i} duration {step.duration_s}s is below the "
                    f"validation period ({min_duration_s}s)")
            if i > 0 and step.activity == self.steps[i - 1].activity:
                raise ValueError(f"steps {i - 1} and {i} repeat the same activity")
        return self


def _rng(*key):
    seq = np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in key])
    return np.random.Generator(np.random.Philox(seq))


def demo_scenario(seed=0, dwell_s=20):
    """A timeline that visits every activity once."""
    steps = tuple(ScenarioStep(a, dwell_s) for a in Activity)
    return Scenario(steps, seed=seed).validate()


def activity_timeline(scenario):
    """Per-second (activity, room) truth; None while walking between steps."""
    timeline = []
    for i, step in enumerate(scenario.steps):
        if i > 0:
            timeline.extend([None] * WALK_SECONDS)
        timeline.extend([(step.activity, ACTIVITY_ROOM[step.activity])]
                        * step.duration_s)
    return timeline


def posture_timeline(scenario):
    """Per-second ground-truth posture, walking during interludes."""
    timeline = []
    for i, step in enumerate(scenario.steps):
        if i > 0:
            timeline.extend([Posture.WALKING] * WALK_SECONDS)
        timeline.extend([ACTIVITY_POSTURE[step.activity]] * step.duration_s)
    return timeline


def timeline_seconds(scenario):
    return (sum(s.duration_s for s in scenario.steps)
            + WALK_SECONDS * (len(scenario.steps) - 1))


def gravity_direction(posture):
    """Unit vector whose cosine against [0,0,1] is the posture's mean."""
    c = POSTURE_MEAN_COSINE[posture]
    return np.array([np.sqrt(1.0 - c * c), 0.0, c])


def gen_accel_trace(scenario):
    """50 Hz acceleration trace plus per-second posture ground truth."""
    postures = posture_timeline(scenario)
    rng = _rng(scenario.seed, _ACCEL_STREAM)
    n = len(postures) * WINDOW_SAMPLES
    xyz = np.empty((n, 3))
    for sec, posture in enumerate(postures):
        block = np.tile(gravity_direction(posture), (WINDOW_SAMPLES, 1))
        if scenario.accel_noise_g > 0:
            block = block + rng.normal(0.0, scenario.accel_noise_g,
                                       block.shape)
        xyz[sec * WINDOW_SAMPLES:(sec + 1) * WINDOW_SAMPLES] = block
    t = np.arange(n) / SAMPLE_RATE_HZ
    return AccelTrace(t, xyz), postures


def _blob_geometry(activity, frame_phase, jitter_rc):
    r0, c0, height, width, vr, vc = BLOB_SPECS[activity]
    r = int(round(r0 + jitter_rc[0] + vr * frame_phase))
    c = int(round(c0 + jitter_rc[1] + vc * frame_phase))
    r = max(0, min(FRAME_HEIGHT - height, r))
    c = max(0, min(FRAME_WIDTH - width, c))
    return r, c, height, width


def render_frame(activity, frame_phase, jitter_rc, amplitude, noise_rng,
                 pixel_noise):
    """One (H, W, 3) uint8 frame; activity None renders background only."""
    img = np.full((FRAME_HEIGHT, FRAME_WIDTH, 3), BACKGROUND_LEVEL)
    if activity is not None:
        r, c, height, width = _blob_geometry(activity, frame_phase, jitter_rc)
        texture = class_texture(activity)
        for ch in range(3):
            img[r:r + height, c:c + width, ch] = amplitude * texture[ch]
    if pixel_noise > 0:
        img += noise_rng.normal(0.0, pixel_noise, img.shape)
    return (np.clip(img, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def render_clip(activity, rng, pixel_noise, position_jitter,
                start_phase=0):
    """A 16-frame clip of one activity, with per-clip jitter from rng."""
    if position_jitter > 0:
        jitter_rc = rng.integers(-position_jitter, position_jitter + 1, 2)
        amplitude = BASE_AMPLITUDE + rng.uniform(-0.05, 0.05)
    else:
        jitter_rc = (0, 0)
        amplitude = BASE_AMPLITUDE
    frames = np.stack([
        render_frame(activity, (start_phase + i) % SEGMENT_FRAMES, jitter_rc,
                     amplitude, rng, pixel_noise)
        for i in range(SEGMENT_FRAMES)
    ])
    return frames


def make_codec_dataset(n_per_class, seed=0, pixel_noise=0.005,
                       position_jitter=4):
    """Labeled VideoSegments, n per activity class, class-major order."""
    segments, labels = [], []
    rng = _rng(seed, _DATASET_STREAM)
    for i in range(n_per_class):
        for activity in Activity:
            frames = render_clip(activity, rng, pixel_noise, position_jitter)
            segments.append(VideoSegment.from_rgb_frames(len(segments), frames))
            labels.append(int(activity))
    return segments, labels


def make_posture_dataset(n_per_class, seed=0, accel_noise_g=0.05):
    """(u, label) pairs from steady single-posture traces via the full
    filter/window/feature chain."""
    us, labels = [], []
    rng = _rng(seed, _ACCEL_STREAM, _DATASET_STREAM)
    for posture in Posture:
        direction = gravity_direction(posture)
        xyz = np.tile(direction, (n_per_class * WINDOW_SAMPLES, 1))
        if accel_noise_g > 0:
            xyz = xyz + rng.normal(0.0, accel_noise_g, xyz.shape)
        t = np.arange(xyz.shape[0]) / SAMPLE_RATE_HZ
        filt = GravityFilter()
        filtered = AccelTrace(t, filt.process(xyz))
        for window in make_windows(filtered):
            us.append(gravity_feature(window).u)
            labels.append(int(posture))
    return np.array(us), np.array(labels, dtype=np.int64)


class RoomCamera:
    """Lazy per-room frame source for one scenario.

    Blob phase is the absolute frame index mod 16 and position jitter is
    fixed per activity instance (per scenario step), so any 16-frame
    window of the stream is deterministic given the scenario seed.
    """

    def __init__(self, scenario, room):
        if room not in ROOMS:
            raise ValueError(f"unknown room {room!r}")
        self.scenario = scenario
        self.room = room
        self._timeline = activity_timeline(scenario)
        self._step_jitter = {}
        self._steps_by_second = self._index_steps()

    def _index_steps(self):
        by_second = []
        for i, step in enumerate(self.scenario.steps):
            if i > 0:
                by_second.extend([None] * WALK_SECONDS)
            by_second.extend([i] * step.duration_s)
        return by_second

    def _jitter_for_step(self, step_idx):
        if step_idx not in self._step_jitter:
            j = self.scenario.position_jitter
            if j > 0:
                rng = _rng(self.scenario.seed, _JITTER_STREAM, step_idx,
                           ROOMS.index(self.room))
                self._step_jitter[step_idx] = (
                    rng.integers(-j, j + 1, 2),
                    BASE_AMPLITUDE + rng.uniform(-0.05, 0.05))
            else:
                self._step_jitter[step_idx] = ((0, 0), BASE_AMPLITUDE)
        return self._step_jitter[step_idx]

    @property
    def total_frames(self):
        return len(self._timeline) * FPS

    def frame(self, frame_index):
        """(H, W, 3) uint8 frame at an absolute stream index."""
        second = frame_index // FPS
        if second >= len(self._timeline):
            raise IndexError(f"frame {frame_index} beyond scenario end")
        entry = self._timeline[second]
        active = entry is not None and entry[1] == self.room
        noise_rng = _rng(self.scenario.seed, _VIDEO_NOISE_STREAM,
                         ROOMS.index(self.room), frame_index)
        if active:
            step_idx = self._steps_by_second[second]
            jitter_rc, amplitude = self._jitter_for_step(step_idx)
            return render_frame(entry[0], frame_index % SEGMENT_FRAMES,
                                jitter_rc, amplitude, noise_rng,
                                self.scenario.pixel_noise)
        return render_frame(None, 0, (0, 0), 0.0, noise_rng,
                            self.scenario.pixel_noise)

    def frames(self, start, count):
        return np.stack([self.frame(start + i) for i in range(count)])

    def segment_at_grid(self, grid_index):
        """VideoSegment grid_index from the stride-16 segmentation."""
        frames = self.frames(grid_index * SEGMENT_FRAMES, SEGMENT_FRAMES)
        return VideoSegment.from_rgb_frames(grid_index, frames)

    def segment_label(self, grid_index):
        """Ground-truth (activity, room) of a grid segment, or None."""
        second = (grid_index * SEGMENT_FRAMES) // FPS
        if second >= len(self._timeline):
            return None
        return self._timeline[second]
