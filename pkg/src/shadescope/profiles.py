"""Router configuration profiles that suppress directory participation."""

from __future__ import annotations

# The 10-parameter exclusive profile: no record publication, no relaying,
# no peer-test probes, fresh identity per restart. Service keys live in a
# separate file and are unaffected by identity rotation.
EXCLUSIVE_PROFILE = """\
router.isHidden=true
router.hiddenMode=true
i2np.udp.addressSources=      # empty
i2np.ntcp2.autoip=false
router.floodfillParticipant=false
router.maxParticipatingTunnels=0
router.sharePercentage=0
router.enablePeerTest=false
router.dynamicKeys=true        # ephemeral identity
i2np.udp.requireIntroductions=true
"""

# Only the base 10 parameters are documented; the deeper profile is
# described as adding at least eight more. This extension set is a
# best-effort reconstruction (firewalled declaration, identity-rotation
# keys) and is marked non-normative in the emitted header.
GHOST_EXTENSIONS = """\
i2np.laptopMode=true           # rotate identity on network change
i2np.udp.forceUnreachable=true # declare firewalled status outright
i2np.ntcp.autoip=false
i2np.upnp.enable=false         # no port-mapping chatter
time.disabled=true             # no SNTP queries
router.reseedDisable=true      # no reseed fetches after first start
router.updateDisabled=true     # no update polls
i2cp.tcp.bindAllInterfaces=false
"""

GHOST_HEADER = """\
# ghost profile: the 10 base parameters below are the documented
# exclusive profile; the extension block that follows is a
# NON-NORMATIVE best-effort reconstruction. Profile documentation
# enumerates only the base 10 and describes the deeper variant as
# adding at least eight more; adjust extensions to your router build.
"""

PROFILE_NAMES = ("exclusive", "ghost")


def render_profile(name: str) -> str:
    """Config text for a named profile, LF line endings, '#' comments."""
    if name == "exclusive":
        return EXCLUSIVE_PROFILE
    if name == "ghost":
        return GHOST_HEADER + EXCLUSIVE_PROFILE + GHOST_EXTENSIONS
    raise ValueError(f"unknown profile: {name!r} (expected one of {PROFILE_NAMES})")


def profile_parameters(text: str) -> list[tuple[str, str]]:
    """key=value pairs with comments and blank lines stripped."""
    pairs = []
    for line in text.splitlines():
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, _, value = stripped.partition("=")
        pairs.append((key.strip(), value.strip()))
    return pairs
