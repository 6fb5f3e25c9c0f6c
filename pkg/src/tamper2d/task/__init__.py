from .domain import (
    Action,
    Constraint,
    Domain,
    GroundingConfidence,
    Literals,
    PreconditionUnsatisfied,
    SymbolicState,
    TaskDomainError,
    TaskPlan,
    UnknownVariable,
    apply,
    literals,
    replay,
    satisfies,
    validate_plan,
    violates,
)
from .planner import (
    ConstraintStack,
    HorizonExceeded,
    NoPlanExists,
    PlanQuery,
    assert_constraint,
    clear_constraints,
    goal_reachable,
    plan,
)
from .encoding import DRAWER_OPEN, HANDEMPTY, TaskSpec, at, build_domain, held, location_literals
