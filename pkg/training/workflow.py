from typing import NamedTuple

from langgraph.graph import END, START, StateGraph
from langgraph.graph.state import CompiledStateGraph

from griddata.types import FieldSeries
from training.config import TrainConfig
from training.stages import (
    State,
    gt_stage,
    kr_stage,
    mp_stage,
    stage_seeds,
    teacher_predict_stage,
    teacher_stage,
)
from training.trainer import TrainedModel
from utils.logger import logger


class PipelineResult(NamedTuple):
    teacher: TrainedModel
    gt: TrainedModel
    mp: TrainedModel
    kr: TrainedModel
    teacher_prediction: FieldSeries


class Workflow:
    """Teacher -> GT -> teacher predictions -> MP -> KR, strictly sequential"""

    def __init__(self):
        self.builder = StateGraph(State)

    def node(self):
        self.builder.add_node("teacher", teacher_stage)
        self.builder.add_node("gt", gt_stage)
        self.builder.add_node("teacher_predict", teacher_predict_stage)
        self.builder.add_node("mp", mp_stage)
        self.builder.add_node("kr", kr_stage)

    def edge(self):
        self.builder.add_edge(START, "teacher")
        self.builder.add_edge("teacher", "gt")
        self.builder.add_edge("gt", "teacher_predict")
        self.builder.add_edge("teacher_predict", "mp")
        self.builder.add_edge("mp", "kr")
        self.builder.add_edge("kr", END)

    def __call__(self) -> CompiledStateGraph:
        self.node()
        self.edge()
        return self.builder.compile()


workflow = Workflow()()


def run_pipeline(inputs: FieldSeries, targets: FieldSeries, cfg: TrainConfig) -> PipelineResult:
    """
    Train the teacher and the three student variants.

    Args:
        inputs: Training inputs (pre-upsampled to the target grid)
        targets: Ground-truth training targets
        cfg: Shared training configuration; cfg.seed drives every stage

    Returns:
        PipelineResult with the four trained models and the teacher's predictions
    """
    try:
        state = workflow.invoke({
            "inputs": inputs,
            "targets": targets,
            "cfg": cfg,
            "seeds": stage_seeds(cfg.seed),
        })
        logger.info(
            "Pipeline finished: best epochs "
            + ", ".join(f"{k}={state[k].best_epoch}" for k in ("teacher", "gt", "mp", "kr"))
        )
        return PipelineResult(
            teacher=state["teacher"],
            gt=state["gt"],
            mp=state["mp"],
            kr=state["kr"],
            teacher_prediction=state["teacher_prediction"],
        )
    except Exception as e:
        logger.error(f"Error running training pipeline: {e}")
        raise
