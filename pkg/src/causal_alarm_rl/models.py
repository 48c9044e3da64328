"""
SQLAlchemy models for stored experiment runs.

Models:
- Run: one experiment (configuration echo and final-window summary)
- EpisodeRow: one (seed, episode) metrics record of a run
"""

from sqlalchemy import JSON, Column, DateTime, Float, ForeignKey, Integer, String
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func

from causal_alarm_rl.database import Base


class Run(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    algo = Column(String(16), nullable=False)
    mask_mode = Column(String(16), nullable=False)
    topk = Column(Integer, nullable=False)
    episodes = Column(Integer, nullable=False)
    seeds = Column(JSON)  # list of seeds
    topology_seeds = Column(JSON)  # seed -> device topology generation seed
    out_dir = Column(String(500))
    config = Column(JSON, nullable=False)
    summary = Column(JSON)
    created_at = Column(DateTime(timezone=True), server_default=func.now())

    episode_rows = relationship(
        "EpisodeRow", back_populates="run", cascade="all, delete-orphan"
    )

    def __repr__(self):
        return f"<Run(id={self.id}, algo='{self.algo}', mask='{self.mask_mode}', K={self.topk})>"


class EpisodeRow(Base):
    __tablename__ = "episodes"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False, index=True)
    seed = Column(Integer, nullable=False)
    episode = Column(Integer, nullable=False)

    cumulative_reward = Column(Float)
    intervention_steps = Column(Integer)
    mean_active_alarms = Column(Float)
    f1 = Column(Float)
    precision = Column(Float)
    recall = Column(Float)
    accuracy = Column(Float)
    shd = Column(Integer)

    run = relationship("Run", back_populates="episode_rows")

    def __repr__(self):
        return f"<EpisodeRow(run_id={self.run_id}, seed={self.seed}, episode={self.episode})>"
