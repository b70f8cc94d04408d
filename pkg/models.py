from sqlalchemy import Column, String, DateTime, Integer, Text, JSON, Float, ForeignKey
from sqlalchemy.orm import declarative_base, relationship
from datetime import datetime
import uuid

Base = declarative_base()

class FuzzRun(Base):
    __tablename__ = 'fuzz_run'

    id = Column(String(36), primary_key=True, default=lambda: str(uuid.uuid4()))
    created_at = Column(DateTime, default=datetime.utcnow)
    seed = Column(Integer, nullable=False)
    dims = Column(JSON, nullable=False)
    trials = Column(Integer, nullable=False)
    total_failures = Column(Integer, default=0)
    wall_clock_seconds = Column(Float)

    suites = relationship('SuiteResult', back_populates='run', cascade="all, delete-orphan")
    failures = relationship('FailingInstance', back_populates='run', cascade="all, delete-orphan")

class SuiteResult(Base):
    __tablename__ = 'suite_result'

    id = Column(Integer, primary_key=True)
    run_id = Column(String(36), ForeignKey('fuzz_run.id', ondelete="CASCADE"), nullable=False)
    suite = Column(String(32), nullable=False)
    passed = Column(Integer, default=0)
    failed = Column(Integer, default=0)
    indeterminate = Column(Integer, default=0)
    worst_residuals = Column(JSON, nullable=True)
    flags = Column(JSON, nullable=True)  # e.g. negative-control escape counts
    wall_clock_seconds = Column(Float)

    run = relationship('FuzzRun', back_populates='suites')

class FailingInstance(Base):
    __tablename__ = 'failing_instance'

    id = Column(Integer, primary_key=True)
    run_id = Column(String(36), ForeignKey('fuzz_run.id', ondelete="CASCADE"), nullable=False)
    suite = Column(String(32), nullable=False)
    dim = Column(Integer, nullable=False)
    trial = Column(Integer, nullable=False)
    error = Column(Text, nullable=True)

    run = relationship('FuzzRun', back_populates='failures')
