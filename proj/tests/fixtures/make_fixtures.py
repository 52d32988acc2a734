#!/usr/bin/env python3
"""Writes the detection fixture corpus.

Every capture is built here with hashlib/base64/urllib only, so the expected
labels do not depend on the C++ code under test. Rerun after editing:

    python3 tests/fixtures/make_fixtures.py
"""

import base64
import hashlib
import json
import pathlib
import urllib.parse

HERE = pathlib.Path(__file__).resolve().parent
OUT = HERE / "captures"

# Raw persona values, normalized the same way the injected form's values are:
# trimmed, lowercased, phone reduced to digits.
PERSONA = {
    "email": "Avery.Placeholder@example.org",
    "phone_number": "+1 (555) 010-0199",
    "first_name": "Avery",
    "last_name": "Placeholder",
    "city": "Springfield",
    "state": "IL",
    "zip_code": "62701",
}
TOKENS = {
    "email": "em", "phone_number": "ph", "first_name": "fn", "last_name": "ln",
    "city": "ct", "state": "st", "zip_code": "zp", "gender": "ge",
    "country": "country", "date_of_birth": "db", "external_id": "external_id",
}
ALL_FIELDS = list(TOKENS)


def normalized(field):
    v = PERSONA[field].strip()
    if field == "phone_number":
        return "".join(c for c in v if c.isdigit())
    if field == "zip_code":
        return v
    return " ".join(v.lower().split())


def meta_sha(field):
    return hashlib.sha256(normalized(field).encode()).hexdigest()


def google_sha(field):
    b64 = base64.b64encode(normalized(field).encode()).decode()
    return hashlib.sha256(b64.encode()).hexdigest()


def q(pairs):
    return urllib.parse.urlencode(pairs)


def entry(url, method="GET", body=None, initiator="top_document", ts=0):
    parts = urllib.parse.urlsplit(url)
    e = {
        "url": url,
        "method": method,
        "query": [list(p) for p in urllib.parse.parse_qsl(parts.query, keep_blank_values=True)],
        "initiator": initiator,
        "timestamp_ms": ts,
    }
    if body is not None:
        e["body"] = body
    return e


def meta_config_url(pixel):
    return f"https://connect.facebook.net/signals/config/{pixel}?v=2.9.180&r=stable&domain=site.test"


def meta_config_body(pixel, keys, style="minified"):
    """A synthetic config script. keys=None leaves the match-key list out."""
    noise = ("/*1700000000,,JIT Construction: v1000000000,en_US*/\n"
             "(function(a,b,c,d){var e={exports:{}};e.exports;(function(){"
             "var f=a.fbq;f.execStart=a.performance&&a.performance.now&&a.performance.now();"
             "})();return e.exports})(window,document,location,history);\n")
    head = f'fbq.registerPlugin("config:{pixel}",{{__fbEventsPlugin:1,plugin:function(fbq,instance,config){{'
    tail = f'instance.configLoaded("{pixel}");}}}});\n'
    if keys is None:
        return noise + head + tail
    tokens = [TOKENS[k] for k in keys]
    if style == "minified":
        setter = ('config.set("%s","automaticMatching",{"selectedMatchKeys":%s});'
                  % (pixel, json.dumps(tokens, separators=(",", ":"))))
    elif style == "single":
        setter = ("config.set('%s', 'automaticMatching', {'selectedMatchKeys': [%s]});"
                  % (pixel, ", ".join("'%s'" % t for t in tokens)))
    elif style == "escaped":
        inner = ",".join('\\"%s\\"' % t for t in tokens)
        setter = 'fbq.__cfg("{\\"selectedMatchKeys\\":[%s]}");' % inner
    else:
        raise ValueError(style)
    return noise + head + setter + tail


def meta_hit(pixel, ev="SubscribedButtonClick", extra=(), host="www.facebook.com", path="/tr/"):
    pairs = [("id", pixel), ("ev", ev), ("dl", "https://site.test/"), ("seq", "2")]
    pairs += list(extra)
    return f"https://{host}{path}?" + q(pairs)


def udff(fields, mode="udff", digest=meta_sha, upper=False):
    out = []
    for f in fields:
        d = digest(f)
        out.append((f"{mode}[{TOKENS[f]}]", d.upper() if upper else d))
    return out


def gtag_url(tag):
    return f"https://www.googletagmanager.com/gtag/js?id={tag}&l=dataLayer&cx=c"


def first_party_body(tag):
    return ("/* first-party tag */ var data={\"resource\":{\"version\":\"1\"}};"
            "window.google_tag_manager=window.google_tag_manager||{};"
            f"window.google_tag_manager[\"{tag}\"]={{dataLayer:{{name:\"dataLayer\"}}}};"
            "var d='https://www.googletagmanager.com/gtag/destination?id=" + tag + "';\n")


def gem(field="email"):
    return f"tv.1~em.{google_sha(field)}" if field == "email" else f"tv.1~pn.{google_sha(field)}"


def empty_side():
    return {"installations": [], "configured": False, "config_fields": [],
            "fdc": False, "fdc_fields": [], "modes": []}


FIXTURES = []


def fixture(name, entries, scripts=None, meta=None, google=None, outcome="ok", note=""):
    FIXTURES.append({
        "name": name,
        "note": note,
        "capture": {
            "format": "formscope-capture/1",
            "site": {"domain": name.replace("_", "-") + ".test", "rank": len(FIXTURES) + 1,
                     "vertical": "health" if len(FIXTURES) % 3 == 0 else "shopping"},
            "visit_index": 1,
            "form_injected": outcome == "ok",
            "outcome": outcome,
            "entries": entries,
            "scripts": scripts or {},
            "diagnostics": [],
        },
        "expected": {"meta": {**empty_side(), **(meta or {})},
                     "google": {**empty_side(), **(google or {})}},
    })


def meta_inst(pixel):
    return [["meta", pixel, "pixel", False]]


def g_inst(tag, kind, first_party=False):
    return [["google", tag, kind, first_party]]


P1, P2 = "1234567890123456", "987654321098765"
FORM7 = ["email", "phone_number", "first_name", "last_name", "city", "state", "zip_code"]

# Meta installation and static configuration.
fixture("meta_default_config", [entry(meta_config_url(P1))],
        {meta_config_url(P1): meta_config_body(P1, ALL_FIELDS)},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ALL_FIELDS})
fixture("meta_custom_config", [entry(meta_config_url(P1))],
        {meta_config_url(P1): meta_config_body(P1, ["email", "phone_number"])},
        meta={"installations": meta_inst(P1), "configured": True,
              "config_fields": ["email", "phone_number"]})
fixture("meta_empty_key_list", [entry(meta_config_url(P1))],
        {meta_config_url(P1): meta_config_body(P1, [])},
        meta={"installations": meta_inst(P1)})
fixture("meta_keys_absent", [entry(meta_config_url(P1))],
        {meta_config_url(P1): meta_config_body(P1, None)},
        meta={"installations": meta_inst(P1)})
fixture("meta_single_quoted_keys", [entry(meta_config_url(P1))],
        {meta_config_url(P1): meta_config_body(P1, ["city", "state", "zip_code"], "single")},
        meta={"installations": meta_inst(P1), "configured": True,
              "config_fields": ["city", "state", "zip_code"]})
fixture("meta_escaped_keys", [entry(meta_config_url(P1))],
        {meta_config_url(P1): meta_config_body(P1, ["gender", "date_of_birth"], "escaped")},
        meta={"installations": meta_inst(P1), "configured": True,
              "config_fields": ["gender", "date_of_birth"]})
fixture("meta_config_without_body", [entry(meta_config_url(P1))],
        meta={"installations": meta_inst(P1)}, note="body missing, warning only")
fixture("meta_non_numeric_pixel",
        [entry("https://connect.facebook.net/signals/config/abc123?v=2.9.180")],
        {"https://connect.facebook.net/signals/config/abc123?v=2.9.180":
         meta_config_body("abc123", ALL_FIELDS)},
        note="malformed pixel id is not an installation")
fixture("meta_two_pixels_disagree",
        [entry(meta_config_url(P1)), entry(meta_config_url(P2))],
        {meta_config_url(P1): meta_config_body(P1, ["email"]),
         meta_config_url(P2): meta_config_body(P2, ["phone_number", "country"])},
        meta={"installations": meta_inst(P1) + meta_inst(P2), "configured": True,
              "config_fields": ["email", "phone_number", "country"]})
fixture("meta_config_in_subframe", [entry(meta_config_url(P1), initiator="subframe")],
        {meta_config_url(P1): meta_config_body(P1, ["external_id"])},
        meta={"installations": meta_inst(P1), "configured": True,
              "config_fields": ["external_id"]})
fixture("meta_fbevents_only",
        [entry("https://connect.facebook.net/en_US/fbevents.js")],
        {"https://connect.facebook.net/en_US/fbevents.js": "/* runtime */ var fbq;"},
        note="runtime without a config request is not counted")

# Meta dynamic collection.
fixture("meta_fdc_auto_email",
        [entry(meta_config_url(P1)), entry(meta_hit(P1, extra=udff(["email"])))],
        {meta_config_url(P1): meta_config_body(P1, ["email"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["email"],
              "fdc": True, "fdc_fields": ["email"], "modes": ["automatic"]})
fixture("meta_fdc_auto_all_form_fields",
        [entry(meta_config_url(P1)), entry(meta_hit(P1, extra=udff(FORM7)))],
        {meta_config_url(P1): meta_config_body(P1, ALL_FIELDS)},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ALL_FIELDS,
              "fdc": True, "fdc_fields": FORM7, "modes": ["automatic"]})
fixture("meta_fdc_manual",
        [entry(meta_config_url(P1)), entry(meta_hit(P1, extra=udff(["email"], mode="ud")))],
        {meta_config_url(P1): meta_config_body(P1, None)},
        meta={"installations": meta_inst(P1), "fdc": True, "fdc_fields": ["email"],
              "modes": ["manual"]})
fixture("meta_fdc_mixed_modes",
        [entry(meta_config_url(P1)),
         entry(meta_hit(P1, extra=udff(["email", "city"]) + udff(["phone_number"], mode="ud")))],
        {meta_config_url(P1): meta_config_body(P1, ["email", "city"])},
        meta={"installations": meta_inst(P1), "configured": True,
              "config_fields": ["city", "email"], "fdc": True,
              "fdc_fields": ["email", "city", "phone_number"], "modes": ["automatic", "manual"]})
fixture("meta_fdc_post_body",
        [entry(meta_config_url(P1)),
         entry("https://www.facebook.com/tr/", method="POST",
               body=q([("id", P1), ("ev", "Lead")] + udff(["first_name", "last_name"])))],
        {meta_config_url(P1): meta_config_body(P1, ["first_name", "last_name"])},
        meta={"installations": meta_inst(P1), "configured": True,
              "config_fields": ["first_name", "last_name"], "fdc": True,
              "fdc_fields": ["first_name", "last_name"], "modes": ["automatic"]})
fixture("meta_fdc_privacy_sandbox",
        [entry(meta_config_url(P1)),
         entry(meta_hit(P1, extra=udff(["zip_code"]), path="/privacy_sandbox/register/trigger"))],
        {meta_config_url(P1): meta_config_body(P1, ["zip_code"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["zip_code"],
              "fdc": True, "fdc_fields": ["zip_code"], "modes": ["automatic"]})
fixture("meta_fdc_uppercase_digest",
        [entry(meta_config_url(P1)), entry(meta_hit(P1, extra=udff(["state"], upper=True)))],
        {meta_config_url(P1): meta_config_body(P1, ["state"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["state"],
              "fdc": True, "fdc_fields": ["state"], "modes": ["automatic"]})
fixture("meta_fdc_without_config_request",
        [entry(meta_hit(P1, extra=udff(["email"])))],
        meta={"fdc": True, "fdc_fields": ["email"], "modes": ["automatic"]},
        note="collection is detected even when the config load was not captured")
fixture("meta_fdc_unknown_token",
        [entry(meta_config_url(P1)), entry(meta_hit(P1, extra=[("udff[zz]", meta_sha("email"))]))],
        {meta_config_url(P1): meta_config_body(P1, ["email"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["email"],
              "fdc": True, "fdc_fields": ["email"], "modes": ["automatic"]},
        note="unmapped token keeps the key's mode, field comes from the digest")
fixture("meta_fdc_token_field_mismatch",
        [entry(meta_config_url(P1)), entry(meta_hit(P1, extra=[("udff[ph]", meta_sha("email"))]))],
        {meta_config_url(P1): meta_config_body(P1, ["email"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["email"],
              "fdc": True, "fdc_fields": ["email"], "modes": ["unknown"]})
fixture("meta_fdc_json_body",
        [entry(meta_config_url(P1)),
         entry("https://www.facebook.com/tr/", method="POST",
               body=json.dumps({"id": P1, "user_data": {"em": meta_sha("email")}}))],
        {meta_config_url(P1): meta_config_body(P1, ["email"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["email"],
              "fdc": True, "fdc_fields": ["email"], "modes": ["unknown"]})

# Negative decoys: none of these is collection by a tracker.
fixture("decoy_first_party_collector",
        [entry("https://site.test/collect?" + q([("h", meta_sha("email")), ("g", google_sha("email"))]))])
fixture("decoy_meta_plugin_path",
        [entry("https://www.facebook.com/plugins/like.php?" + q([("href", "https://site.test/"),
                                                                ("h", meta_sha("email"))]))])
fixture("decoy_lookalike_host",
        [entry("https://notfacebook.com/tr/?" + q(udff(["email"]))),
         entry("https://www.google.com.evil.test/ccm/form-data/1?" + q([("em", gem())]))])
fixture("decoy_segment_prefix",
        [entry("https://www.facebook.com/track/?" + q(udff(["email"]))),
         entry("https://www.google.com/ccm/form-database/1?" + q([("em", gem())]))])
fixture("decoy_wrong_value",
        [entry(meta_config_url(P1)),
         entry(meta_hit(P1, extra=[("udff[em]", hashlib.sha256(b"someone.else@example.org").hexdigest())]))],
        {meta_config_url(P1): meta_config_body(P1, ["email"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["email"]})
fixture("decoy_page_view_only",
        [entry(meta_config_url(P1)), entry(meta_hit(P1, ev="PageView"))],
        {meta_config_url(P1): meta_config_body(P1, None)},
        meta={"installations": meta_inst(P1)})
fixture("decoy_google_digest_to_meta",
        [entry(meta_config_url(P1)),
         entry(meta_hit(P1, extra=[("udff[em]", google_sha("email"))]))],
        {meta_config_url(P1): meta_config_body(P1, ["email"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["email"]},
        note="Meta endpoints are searched for Meta digests only")
fixture("decoy_meta_digest_to_google",
        [entry(gtag_url("G-ABC1234567")),
         entry("https://analytics.google.com/g/collect?" + q([("tid", "G-ABC1234567"),
                                                             ("em", "tv.1~em." + meta_sha("email"))]))],
        google={"installations": g_inst("G-ABC1234567", "ga4")})
fixture("decoy_first_party_name_only",
        [entry("https://site.test/static/googletagmanager-notes.js")],
        {"https://site.test/static/googletagmanager-notes.js": "// release notes, nothing to see\n"})
fixture("decoy_unknown_tag_prefix", [entry(gtag_url("GTM-ABCDEF1"))],
        note="container IDs are not one of the four tag kinds")

# Google installation.
fixture("google_ads_tag", [entry(gtag_url("AW-1234567890"))],
        google={"installations": g_inst("AW-1234567890", "ads")})
fixture("google_ga4_tag", [entry(gtag_url("G-ABC1234567"))],
        google={"installations": g_inst("G-ABC1234567", "ga4")})
fixture("google_gt_tag", [entry(gtag_url("GT-WXYZ987"))],
        google={"installations": g_inst("GT-WXYZ987", "ga4")})
fixture("google_floodlight_tag", [entry(gtag_url("DC-7654321"))],
        google={"installations": g_inst("DC-7654321", "floodlight")})
fixture("google_universal_tag", [entry(gtag_url("UA-123456-1"))],
        google={"installations": g_inst("UA-123456-1", "universal_analytics")})
FP_URL = "https://site.test/metrics/1/googletagmanager.js"
fixture("google_first_party", [entry(FP_URL + "?id=G-FIRST12345")],
        {FP_URL + "?id=G-FIRST12345": first_party_body("G-FIRST12345")},
        google={"installations": g_inst("G-FIRST12345", "ga4", True)})
fixture("google_first_party_id_from_body", [entry(FP_URL)],
        {FP_URL: first_party_body("AW-5550001")},
        google={"installations": g_inst("AW-5550001", "ads", True)})

# Google dynamic collection. Automatic and manual look the same on the wire.
fixture("google_fdc_ccm",
        [entry(gtag_url("UA-123456-1")),
         entry("https://www.google.com/ccm/form-data/123456?" + q([("tid", "UA-123456-1"), ("em", gem())]))],
        google={"installations": g_inst("UA-123456-1", "universal_analytics"),
                "fdc": True, "fdc_fields": ["email"], "modes": ["unknown"]})
fixture("google_fdc_pagead_form_data",
        [entry(gtag_url("DC-7654321")),
         entry("https://www.google.com/pagead/form-data/7654321?" + q([("em", gem())]))],
        google={"installations": g_inst("DC-7654321", "floodlight"),
                "fdc": True, "fdc_fields": ["email"], "modes": ["unknown"]})
fixture("google_fdc_conversion",
        [entry(gtag_url("AW-1234567890")),
         entry("https://www.googleadservices.com/pagead/conversion/1234567890/?" +
               q([("label", "form"), ("em", gem())]))],
        google={"installations": g_inst("AW-1234567890", "ads"),
                "fdc": True, "fdc_fields": ["email"], "modes": ["unknown"]})
fixture("google_fdc_beacon_body",
        [entry(gtag_url("G-ABC1234567")),
         entry("https://analytics.google.com/g/collect?v=2&tid=G-ABC1234567", method="POST",
               body=q([("en", "form_submit"), ("em", gem())]))],
        google={"installations": g_inst("G-ABC1234567", "ga4"),
                "fdc": True, "fdc_fields": ["email"], "modes": ["unknown"]})
fixture("google_fdc_phone",
        [entry(gtag_url("AW-1234567890")),
         entry("https://www.googleadservices.com/pagead/conversion/1234567890/?" +
               q([("em", gem("phone_number"))]))],
        google={"installations": g_inst("AW-1234567890", "ads"),
                "fdc": True, "fdc_fields": ["phone_number"], "modes": ["unknown"]})
fixture("google_fdc_first_party",
        [entry(FP_URL + "?id=G-FIRST12345"),
         entry("https://analytics.google.com/g/collect?" + q([("tid", "G-FIRST12345"), ("em", gem())]))],
        {FP_URL + "?id=G-FIRST12345": first_party_body("G-FIRST12345")},
        google={"installations": g_inst("G-FIRST12345", "ga4", True),
                "fdc": True, "fdc_fields": ["email"], "modes": ["unknown"]})

# Both providers.
fixture("both_collecting",
        [entry(meta_config_url(P1)), entry(gtag_url("AW-1234567890")),
         entry(meta_hit(P1, extra=udff(["email", "phone_number"]))),
         entry("https://www.googleadservices.com/pagead/conversion/1234567890/?" + q([("em", gem())]))],
        {meta_config_url(P1): meta_config_body(P1, ALL_FIELDS)},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ALL_FIELDS,
              "fdc": True, "fdc_fields": ["email", "phone_number"], "modes": ["automatic"]},
        google={"installations": g_inst("AW-1234567890", "ads"),
                "fdc": True, "fdc_fields": ["email"], "modes": ["unknown"]})
fixture("both_installed_meta_collecting",
        [entry(meta_config_url(P2)), entry(gtag_url("G-ABC1234567")),
         entry(meta_hit(P2, extra=udff(["email"])))],
        {meta_config_url(P2): meta_config_body(P2, ["email"])},
        meta={"installations": meta_inst(P2), "configured": True, "config_fields": ["email"],
              "fdc": True, "fdc_fields": ["email"], "modes": ["automatic"]},
        google={"installations": g_inst("G-ABC1234567", "ga4")})

# Visit outcomes.
fixture("unreachable_site", [], outcome="unreachable")
fixture("timeout_partial", [entry(meta_config_url(P1))],
        {meta_config_url(P1): meta_config_body(P1, ["email"])},
        meta={"installations": meta_inst(P1), "configured": True, "config_fields": ["email"]},
        outcome="timeout")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.capture"):
        old.unlink()
    manifest = []
    order = {f: i for i, f in enumerate(ALL_FIELDS)}
    for fx in FIXTURES:
        path = OUT / (fx["name"] + ".capture")
        path.write_text(json.dumps(fx["capture"], indent=1, sort_keys=True) + "\n")
        for side in fx["expected"].values():
            side["config_fields"] = sorted(set(side["config_fields"]), key=order.get)
            side["fdc_fields"] = sorted(set(side["fdc_fields"]), key=order.get)
            side["modes"] = sorted(set(side["modes"]))
            side["installations"] = sorted(side["installations"])
        manifest.append({"name": fx["name"], "file": path.name, "note": fx["note"],
                         "expected": fx["expected"]})
    digests = {f: {"meta": meta_sha(f), "google": google_sha(f)} for f in PERSONA}
    (HERE / "expected.json").write_text(json.dumps(
        {"fixtures": manifest, "persona_digests": digests}, indent=1, sort_keys=True) + "\n")
    print(f"{len(manifest)} fixtures")


if __name__ == "__main__":
    main()
