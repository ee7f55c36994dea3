"""Exception types shared across the AML validation pipeline."""

from typing import Optional


class PipelineError(Exception):
    """Base class for every error the pipeline reports to its caller"""


# CAEX parsing


class MalformedXml(PipelineError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        self.message = message
        where = f" (line {line})" if line else ""
        super().__init__(f"Malformed XML{where}: {message}")


class NotCaex(PipelineError):
    def __init__(self, root_tag: str):
        self.root_tag = root_tag
        super().__init__(f"Root element is '{root_tag}', expected 'CAEXFile'")


class DuplicateId(PipelineError):
    def __init__(self, element_id: str):
        self.element_id = element_id
        super().__init__(f"ID '{element_id}' is used by more than one element")


# RDF


class TurtleSyntax(PipelineError):
    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"Turtle syntax error at line {line}: {message}")


# SHACL


class IllFormedShape(PipelineError):
    def __init__(self, shape: str, message: str):
        self.shape = shape
        self.message = message
        super().__init__(f"Ill-formed shape {shape}: {message}")


# LLM bridge


class EmptyConstraints(PipelineError):
    def __init__(self):
        super().__init__("No constraints were given to generate shapes for")


class BadReport(PipelineError):
    def __init__(self, cause: str):
        self.cause = cause
        super().__init__(f"Validation report does not parse: {cause}")


class LlmConfigError(PipelineError):
    """Raised before any network call when the LLM client is misconfigured"""


class NetworkError(PipelineError):
    pass


class HttpStatusError(PipelineError):
    def __init__(self, code: int, body: str = ""):
        self.code = code
        self.body = body
        super().__init__(f"Chat completion endpoint answered HTTP {code}")


class LlmTimeout(PipelineError):
    pass


class MissingFixture(PipelineError):
    def __init__(self, prompt_hash: str):
        self.prompt_hash = prompt_hash
        super().__init__(f"No recorded response for prompt hash {prompt_hash}")


class NoTurtleFound(PipelineError):
    def __init__(self, attempts: int, cause: str = ""):
        self.attempts = attempts
        self.cause = cause
        detail = f": {cause}" if cause else ""
        super().__init__(
            f"No usable Turtle in the model output after {attempts} attempt(s){detail}"
        )


# CLI


class StageError(PipelineError):
    def __init__(self, stage: str, path: Optional[str], cause: Exception):
        self.stage = stage
        self.path = path
        self.cause = cause
        where = f" [{path}]" if path else ""
        super().__init__(f"Stage '{stage}' failed{where}: {cause}")
