// Script and page bodies served by the testbed. The JavaScript mirrors the
// C++ normalization so that the digests the simulated trackers send are the
// ones the detector searches for.

#include <sstream>

#include "formscope/testbed.hpp"

namespace formscope {
namespace {

// SHA-256 over the UTF-8 bytes of a string. crypto.subtle is not relied on
// because it is async and unavailable on insecure origins.
constexpr std::string_view kSha256Js = R"JS(
function fsSha256(text) {
  function rr(v, n) { return (v >>> n) | (v << (32 - n)); }
  var K = [], H = [], found = 0, composite = {}, i, j;
  for (var c = 2; found < 64; c++) {
    if (!composite[c]) {
      for (i = 0; i < 313; i += c) composite[i] = c;
      H[found] = (Math.pow(c, .5) * 4294967296) | 0;
      K[found++] = (Math.pow(c, 1 / 3) * 4294967296) | 0;
    }
  }
  H = H.slice(0, 8);
  var s = unescape(encodeURIComponent(text));
  var bits = s.length * 8, words = [];
  s += '\x80';
  while (s.length % 64 - 56) s += '\x00';
  for (i = 0; i < s.length; i++) {
    j = s.charCodeAt(i);
    words[i >> 2] |= j << ((3 - i) % 4) * 8;
  }
  words[words.length] = (bits / 4294967296) | 0;
  words[words.length] = bits;
  for (j = 0; j < words.length;) {
    var w = words.slice(j, j += 16), old = H;
    H = H.slice(0, 8);
    for (i = 0; i < 64; i++) {
      var w15 = w[i - 15], w2 = w[i - 2], a = H[0], e = H[4];
      var t1 = H[7] + (rr(e, 6) ^ rr(e, 11) ^ rr(e, 25)) + ((e & H[5]) ^ (~e & H[6])) + K[i] +
          (w[i] = i < 16 ? w[i] : (w[i - 16] + (rr(w15, 7) ^ rr(w15, 18) ^ (w15 >>> 3)) + w[i - 7] +
                                   (rr(w2, 17) ^ rr(w2, 19) ^ (w2 >>> 10))) | 0);
      var t2 = (rr(a, 2) ^ rr(a, 13) ^ rr(a, 22)) + ((a & H[1]) ^ (a & H[2]) ^ (H[1] & H[2]));
      H = [(t1 + t2) | 0].concat(H);
      H[4] = (H[4] + t1) | 0;
      H.length = 8;
    }
    for (i = 0; i < 8; i++) H[i] = (H[i] + old[i]) | 0;
  }
  var out = '';
  for (i = 0; i < 8; i++) {
    for (j = 3; j + 1; j--) {
      var b = (H[i] >> (j * 8)) & 255;
      out += (b < 16 ? '0' : '') + b.toString(16);
    }
  }
  return out;
}
function fsToken(el) {
  var n = ((el.name || '') + ' ' + (el.id || '') + ' ' +
           (el.getAttribute('autocomplete') || '')).toLowerCase();
  var t = (el.type || '').toLowerCase();
  if (t === 'email' || n.indexOf('email') >= 0) return 'em';
  if (t === 'tel' || n.indexOf('phone') >= 0) return 'ph';
  if (n.indexOf('first') >= 0 || n.indexOf('given') >= 0) return 'fn';
  if (n.indexOf('last') >= 0 || n.indexOf('family') >= 0) return 'ln';
  if (n.indexOf('city') >= 0) return 'ct';
  if (n.indexOf('state') >= 0 || n.indexOf('region') >= 0) return 'st';
  if (n.indexOf('zip') >= 0 || n.indexOf('postal') >= 0) return 'zp';
  return null;
}
function fsNormalize(tok, v) {
  v = v.replace(/^\s+|\s+$/g, '');
  if (tok === 'ph') return v.replace(/[^0-9]/g, '');
  if (tok === 'zp') return v;
  v = v.toLowerCase();
  if (tok === 'fn' || tok === 'ln' || tok === 'ct' || tok === 'st') v = v.replace(/\s+/g, ' ');
  return v;
}
// Normalized values of the filled inputs around the clicked control.
function fsFormValues(target) {
  var scope = (target.closest && target.closest('form')) || document;
  var out = {}, inputs = scope.querySelectorAll('input');
  for (var i = 0; i < inputs.length; i++) {
    var tok = fsToken(inputs[i]);
    if (tok && inputs[i].value && !(tok in out)) {
      var v = fsNormalize(tok, inputs[i].value);
      if (v) out[tok] = v;
    }
  }
  return out;
}
function fsClicked(ev) {
  var t = ev.target;
  if (!t || !t.closest) return null;
  return t.closest('button, input[type=submit], input[type=button]');
}
function fsSend(url) { var img = new Image(); img.src = url; }
)JS";

}  // namespace

std::string meta_token(PiiField field) {
  switch (field) {
    case PiiField::kEmail: return "em";
    case PiiField::kPhoneNumber: return "ph";
    case PiiField::kFirstName: return "fn";
    case PiiField::kLastName: return "ln";
    case PiiField::kCity: return "ct";
    case PiiField::kState: return "st";
    case PiiField::kZipCode: return "zp";
    case PiiField::kGender: return "ge";
    case PiiField::kCountry: return "country";
    case PiiField::kDateOfBirth: return "db";
    case PiiField::kExternalId: return "external_id";
  }
  return "";
}

namespace {

std::string js_string_list(const PiiFieldSet& fields, const char* sep) {
  std::string out = "[";
  bool first = true;
  for (PiiField f : fields) {
    if (!first) out += sep;
    out += "\"" + meta_token(f) + "\"";
    first = false;
  }
  return out + "]";
}

std::string google_endpoint_js(const std::string& id) {
  // Returns a JS expression building the collection URL for the tag kind.
  auto prefix = google_tag_prefix(id);
  if (prefix == "AW") {
    std::string number = id.substr(3);
    return "'https://www.googleadservices.com/pagead/conversion/" + number +
           "/?label=form&tid=" + id + "'";
  }
  if (prefix == "DC") {
    return "'https://www.google.com/pagead/form-data/" + id + "?tid=" + id + "'";
  }
  if (prefix == "UA") {
    return "'https://www.google.com/ccm/form-data/" + id + "?tid=" + id + "'";
  }
  return "'https://analytics.google.com/g/collect?v=2&en=form_submit&tid=" + id + "'";
}

}  // namespace

std::string meta_runtime_script() {
  std::ostringstream js;
  js << "/* simulated pixel runtime */\n(function () {\n" << kSha256Js << R"JS(
var queued = (window.fbq && window.fbq.queue) || [];
var pixels = {}, order = [], sequence = 0;
function track(id, ev, extra) {
  var url = 'https://www.facebook.com/tr/?id=' + encodeURIComponent(id) +
            '&ev=' + ev + '&dl=' + encodeURIComponent(location.href) +
            '&seq=' + (++sequence);
  fsSend(url + (extra || ''));
}
function loadConfig(id) {
  var s = document.createElement('script');
  s.async = true;
  s.src = 'https://connect.facebook.net/signals/config/' + id + '?v=2.9.176&r=stable';
  (document.head || document.documentElement).appendChild(s);
}
var instance = {
  optIn: function () {}, configLoaded: function () {}
};
var config = {
  set: function (id, key, value) {
    if (!pixels[id]) return;
    if (key === 'automaticMatching' && value) pixels[id].keys = value.selectedMatchKeys || [];
  }
};
function fbq(cmd) {
  var args = Array.prototype.slice.call(arguments, 1);
  if (cmd === 'init') {
    var id = String(args[0]);
    if (!pixels[id]) { pixels[id] = {keys: null, manual: []}; order.push(id); loadConfig(id); }
  } else if (cmd === 'set' && args[0] === 'manualKeys') {
    if (pixels[args[1]]) pixels[args[1]].manual = args[2] || [];
  } else if (cmd === 'track') {
    for (var i = 0; i < order.length; i++) track(order[i], args[0]);
  }
}
fbq.registerPlugin = function (name, plugin) {
  if (plugin && plugin.plugin) plugin.plugin(fbq, instance, config);
};
fbq.loadPlugin = function () {};
window.fbq = fbq;
for (var q = 0; q < queued.length; q++) fbq.apply(null, queued[q]);
document.addEventListener('click', function (ev) {
  var control = fsClicked(ev);
  if (!control) return;
  var values = fsFormValues(control);
  for (var i = 0; i < order.length; i++) {
    var p = pixels[order[i]], extra = '';
    var keys = p.keys || [];
    for (var k = 0; k < keys.length; k++) {
      if (values[keys[k]]) {
        extra += '&' + encodeURIComponent('udff[' + keys[k] + ']') + '=' + fsSha256(values[keys[k]]);
      }
    }
    for (var m = 0; m < p.manual.length; m++) {
      if (values[p.manual[m]]) {
        extra += '&' + encodeURIComponent('ud[' + p.manual[m] + ']') + '=' + fsSha256(values[p.manual[m]]);
      }
    }
    track(order[i], 'SubscribedButtonClick', extra);
  }
}, true);
})();
)JS";
  return js.str();
}

std::string meta_config_script(const PixelSpec& pixel, bool plain) {
  const std::string& id = pixel.tracker_id;
  std::ostringstream js;
  if (plain) {
    js << "fbq.registerPlugin(\"config:" << id << "\", {\n"
       << "  plugin: function (fbq, instance, config) {\n";
    if (pixel.selected_match_keys) {
      js << "    config.set(\"" << id << "\", \"automaticMatching\", {\n"
         << "      \"selectedMatchKeys\": "
         << js_string_list(*pixel.selected_match_keys, ", ") << "\n    });\n";
    }
    js << "    instance.configLoaded(\"" << id << "\");\n  }\n});\n";
    return js.str();
  }
  // Shaped like a minified production config: one long line of unrelated
  // plugin settings around the match-key list.
  js << "/*1739401532,,JIT Construction: v1019817263,en_US*/\n\n"
     << "/**\n* Simulated pixel configuration.\n*/\n"
     << "fbq.version=\"2.9.176\";fbq._releaseSegment=\"stable\";"
     << "fbq.pendingConfigs=[\"global\"];fbq.__openBridgeRollout=1.0;"
     << "(function(e,t,n,o){var r={exports:{}};r.exports;(function(){var "
        "a=e.fbq;a.execStart=e.performance&&e.performance.now&&e.performance."
        "now();if(!function(){var "
        "b=e.postMessage||function(){};if(!a)return!0}())return;})();"
        "})(window,document,location,history);\n"
     << "fbq.registerPlugin(\"config:" << id
     << "\",{__fbEventsPlugin:1,plugin:function(fbq,instance,config){"
     << "config.set(\"" << id
     << "\",\"inferredEvents\",{\"buttonSelector\":\"seed\","
        "\"disableRestrictedData\":false});fbq.loadPlugin(\"inferredevents\");"
     << "config.set(\"" << id
     << "\",\"microdata\",{\"waitTimeMs\":500,\"enablePageHash\":false});"
        "fbq.loadPlugin(\"microdata\");";
  if (pixel.selected_match_keys) {
    js << "config.set(\"" << id << "\",\"automaticMatching\",{\"selectedMatchKeys\":"
       << js_string_list(*pixel.selected_match_keys, ",")
       << "});fbq.loadPlugin(\"identity\");instance.optIn(\"" << id
       << "\",\"AutomaticMatching\",true);";
  }
  js << "config.set(\"" << id
     << "\",\"openbridge\",{\"endpoints\":[{\"endpoint\":\"\"}]});"
        "instance.configLoaded(\""
     << id << "\");}});\n";
  return js.str();
}

std::string google_tag_script(const PixelSpec& pixel) {
  const std::string& id = pixel.tracker_id;
  bool collect = pixel.selected_match_keys &&
                 pixel.selected_match_keys->count(PiiField::kEmail) > 0;
  std::ostringstream js;
  js << "// simulated Google tag " << id << "\n(function () {\n"
     << "var data = {\"resource\": {\"version\": \"3\", \"tags\": [{\"function\": "
        "\"__googtag\", \"vtp_tagId\": \""
     << id << "\", \"vtp_enableUserProvidedDataCollection\": "
     << (collect ? "true" : "false") << "}]}, \"destination\": "
     << "\"https://www.googletagmanager.com/gtag/destination?id=" << id << "\"};\n"
     << "window.google_tag_manager = window.google_tag_manager || {};\n"
     << "window.google_tag_manager[\"" << id << "\"] = data;\n"
     << kSha256Js << "var endpoint = " << google_endpoint_js(id) << ";\n"
     << "var beacon = " << (endpoint_uses_beacon(id) ? "true" : "false") << ";\n"
     << R"JS(function dl() { return '&dl=' + encodeURIComponent(location.href); }
if (beacon) fsSend(endpoint.replace('en=form_submit', 'en=page_view') + dl());
if (!data.resource.tags[0].vtp_enableUserProvidedDataCollection) return;
document.addEventListener('click', function (ev) {
  var control = fsClicked(ev);
  if (!control) return;
  var values = fsFormValues(control);
  if (!values.em) return;
  var digest = fsSha256(btoa(unescape(encodeURIComponent(values.em))));
  var payload = 'em=tv.1~em.' + digest;
  if (beacon && navigator.sendBeacon) {
    navigator.sendBeacon(endpoint + dl(), payload);
  } else {
    fsSend(endpoint + dl() + '&' + payload);
  }
}, true);
})();
)JS";
  return js.str();
}

bool endpoint_uses_beacon(const std::string& tag_id) {
  auto prefix = google_tag_prefix(tag_id);
  return prefix == "G" || prefix == "GT";
}

std::string first_party_tag_path(std::size_t index) {
  return "/metrics/" + std::to_string(index) + "/googletagmanager.js";
}

PageBundle generate_site(const SiteSpec& spec) {
  PageBundle bundle;
  std::ostringstream head, body;
  std::size_t first_party = 0;
  std::vector<const PixelSpec*> meta;
  for (const auto& pixel : spec.pixels) {
    if (pixel.provider == Provider::kMeta) {
      meta.push_back(&pixel);
      continue;
    }
    if (pixel.first_party_mode) {
      std::string path = first_party_tag_path(first_party++);
      bundle.resources[path] = google_tag_script(pixel);
      head << "<script async src=\"" << path << "\"></script>\n";
    } else {
      head << "<script async src=\"https://www.googletagmanager.com/gtag/js?id="
           << pixel.tracker_id << "\"></script>\n";
    }
  }
  if (!meta.empty()) {
    head << "<script>\nwindow.fbq = window.fbq || function () {\n"
            "  (window.fbq.queue = window.fbq.queue || []).push(arguments);\n};\n";
    for (const PixelSpec* pixel : meta) {
      head << "fbq('init', '" << pixel->tracker_id << "');\n";
      if (!pixel->manual_keys.empty()) {
        head << "fbq('set', 'manualKeys', '" << pixel->tracker_id << "', "
             << js_string_list(pixel->manual_keys, ", ") << ");\n";
      }
    }
    head << "fbq('track', 'PageView');\n</script>\n"
         << "<script async src=\"https://connect.facebook.net/en_US/fbevents.js\">"
            "</script>\n";
  }
  if (spec.decoys) {
    bundle.resources["/static/googletagmanager-notes.js"] =
        "/* release notes for the analytics rollout: see ticket G-NOTATAG */\n"
        "var rolloutNotes = {owner: 'web', stage: 2};\n";
    head << "<script async src=\"/static/googletagmanager-notes.js\"></script>\n"
         << "<script>\n(function () {\n" << kSha256Js << R"JS(
document.addEventListener('click', function (ev) {
  var control = fsClicked(ev);
  if (!control) return;
  var v = fsFormValues(control);
  if (!v.em) return;
  var h = fsSha256(v.em);
  fetch('/collect?h=' + h, {method: 'GET'}).catch(function () {});
  fsSend('https://www.facebook.com/plugins/like.php?href=' +
         encodeURIComponent(location.href) + '&h=' + h);
}, true);
})();
</script>
)JS";
  }

  switch (spec.shape) {
    case PageShape::kAnchor:
      body << "<div class=\"hero\"><h1>Welcome to " << spec.domain
           << "</h1><p>Simulated landing page.</p></div>\n";
      break;
    case PageShape::kNativeForm:
      body << "<div class=\"hero\"><h1>" << spec.domain << "</h1></div>\n"
           << "<form id=\"newsletter\" action=\"#\">"
              "<label>Newsletter <input type=\"email\" name=\"newsletter_email\">"
              "</label><button type=\"submit\">Subscribe</button></form>\n"
           << "<script>document.getElementById('newsletter').addEventListener("
              "'submit', function (e) { e.preventDefault(); });</script>\n";
      break;
    case PageShape::kDegenerate:
      body << "<h1>" << spec.domain << "</h1>\n<p>No containers here.</p>\n";
      break;
  }
  bundle.html = "<!doctype html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" +
                spec.domain + "</title>\n" + head.str() + "</head>\n<body>\n" +
                body.str() + "</body>\n</html>\n";
  return bundle;
}

}  // namespace formscope
