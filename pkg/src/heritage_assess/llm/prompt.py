import base64
import re
from functools import lru_cache
from importlib import resources

PLACEHOLDER = "{{Adress}}"


class PromptError(ValueError):
    pass


@lru_cache(maxsize=None)
def default_template() -> str:
    """The shipped facade-assessment prompt with its ``{{Adress}}`` placeholder."""
    text = resources.files("heritage_assess").joinpath("data/default_prompt.txt").read_text(encoding="utf-8")
    return text.rstrip("\n")


def encode_image(data: bytes) -> str:
    """Standard padded base64 (RFC 4648) of the image bytes."""
    if not data:
        raise ValueError("image payload is empty")
    return base64.b64encode(data).decode("ascii")


def render_prompt(address: str, template: str | None = None) -> str:
    template = default_template() if template is None else template
    count = template.count(PLACEHOLDER)
    if count != 1:
        raise PromptError(f"template must contain {PLACEHOLDER} exactly once, found {count}")
    return template.replace(PLACEHOLDER, address)


def with_construction_year(prompt: str, year: int) -> str:
    """Append the known construction year to a rendered prompt (ablation runs only)."""
    return f"{prompt} The building was constructed in {int(year)}."


def requested_fields(template: str | None = None) -> list[str]:
    """Field keys the template's JSON dictionary asks for, in order."""
    template = default_template() if template is None else template
    start = template.find("{", template.find(PLACEHOLDER) + len(PLACEHOLDER))
    body = template[start:]
    return re.findall(r"[{,]\s*([a-z_]+):", body)
