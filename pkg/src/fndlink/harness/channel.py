"""
Static wireless channel between users and FND clusters.

Each (user, cluster) pair attenuates the user's tone by a fixed gain in dB
drawn from Normal(0, gain_sd_db), plus a bulk offset per user. Gains are
drawn per cluster index, so adding clusters leaves earlier gains intact.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from fndlink.errors import DimensionMismatchError
from fndlink.physics import Tone
from fndlink.scene import Stream, stream_rng


@dataclass(frozen=True)
class ChannelModel:
    """Gains in dB, shape (n_users, n_clusters)."""

    gains_db: np.ndarray

    def __post_init__(self):
        gains = np.array(self.gains_db, dtype=float)
        if gains.ndim != 2:
            raise DimensionMismatchError("channel gains must be a (users, clusters) matrix")
        gains.setflags(write=False)
        object.__setattr__(self, "gains_db", gains)

    @property
    def n_users(self) -> int:
        return int(self.gains_db.shape[0])

    @property
    def n_clusters(self) -> int:
        return int(self.gains_db.shape[1])

    def cluster_tones(self, user_tones: Sequence[Tone]) -> list[list[Tone]]:
        """Tones seen by every cluster when each user sends ``user_tones[u]``."""
        if len(user_tones) != self.n_users:
            raise DimensionMismatchError(f"{len(user_tones)} tones for {self.n_users} users")
        return [
            [tone.attenuated(float(self.gains_db[u, k])) for u, tone in enumerate(user_tones)]
            for k in range(self.n_clusters)
        ]

    @classmethod
    def flat(cls, n_users: int, n_clusters: int) -> "ChannelModel":
        return cls(np.zeros((n_users, n_clusters)))


def draw_channel(
    seed: int,
    n_users: int,
    n_clusters: int,
    gain_sd_db: float = 3.0,
    user_offsets_db: Optional[Sequence[float]] = None,
) -> ChannelModel:
    offsets = np.zeros(n_users) if not user_offsets_db else np.asarray(user_offsets_db, dtype=float)
    if offsets.shape != (n_users,):
        raise DimensionMismatchError("one bulk offset is required per user")
    gains = np.empty((n_users, n_clusters))
    for k in range(n_clusters):
        gains[:, k] = stream_rng(seed, Stream.CHANNEL, k).normal(0.0, gain_sd_db, size=n_users)
    return ChannelModel(gains + offsets[:, None])
