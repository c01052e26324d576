import uuid

from typing import Annotated, Any, Optional
from pydantic import BaseModel, Field

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class CommandResult(BaseModel):
    """Outcome of one CLI command"""
    run_id: Annotated[str, "Run Id"] = Field(default_factory=lambda: uuid.uuid4().hex)
    command: Annotated[Optional[str], "Command"] = None
    error: Annotated[bool, "Error"] = False
    message: Annotated[Optional[str], "Message"] = None
    data: Any = None
    exit_code: Annotated[int, "Exit Code"] = EXIT_OK
