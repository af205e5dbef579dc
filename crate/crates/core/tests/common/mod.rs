#![allow(dead_code)]

pub mod fixtures;
pub mod synth;

use std::collections::HashSet;

/// Exact Jaccard similarity of the character `k`-shingle sets.
pub fn shingle_jaccard(a: &str, b: &str, k: usize) -> f64 {
    let shingles = |s: &str| -> HashSet<String> {
        let chars: Vec<char> = s.chars().collect();
        chars.windows(k).map(|w| w.iter().collect()).collect()
    };
    let (sa, sb) = (shingles(a), shingles(b));
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

/// Amharic, Tigrinya and English paragraphs that are not part of the
/// bundled profile training text.
pub const HELD_OUT_AM: &[&str] = &[
    "የአየር ሁኔታ ትንበያ እንደሚያሳየው በሚቀጥለው ሳምንት ከባድ ዝናብ ይጠበቃል። አርሶ አደሮች ሰብላቸውን በጊዜ እንዲሰበስቡ ተመክረዋል።",
    "የከተማው አስተዳደር የውሃ መውረጃ ቦዮችን እያጸዳ መሆኑን ገልጿል። ነዋሪዎችም ቆሻሻ በየመንገዱ እንዳይጥሉ ጠይቋል።",
    "ብሔራዊ ቡድኑ ትናንት ምሽት ባደረገው ጨዋታ ሁለት ለአንድ አሸንፏል። ደጋፊዎች በስታዲየሙ ደስታቸውን ገልጸዋል።",
];

pub const HELD_OUT_TI: &[&str] = &[
    "ትንቢት ኩነታት ኣየር ከም ዘርእዮ ኣብ ዝመጽእ ሰሙን ብርቱዕ ዝናብ ይጽበ ኣሎ። ሓረስቶት ዘርኦም ብግዜኡ ክእክቡ ተመኺሮም።",
    "ምምሕዳር ከተማ ናይ ማይ መውረዲ ቦያታት ይጸርዩ ከም ዘለዉ ሓቢሩ። ነበርቲ ድማ ጓሓፍ ኣብ ጽርግያ ከይድርብዩ ተሓቲቶም።",
    "እቲ ሃገራዊ ጋንታ ትማሊ ምሸት ኣብ ዝገበሮ ጸወታ ክልተ ንሓደ ተዓዊቱ። ደገፍቲ ኣብቲ ስታድዮም ሓጎሶም ገሊጾም።",
];

pub const HELD_OUT_EN: &[&str] = &[
    "the quick brown fox jumps",
    "The weather forecast shows that heavy rain is expected next week. Farmers have been advised to harvest their crops on time.",
    "The national team won two to one in last night's match. Supporters celebrated in the stadium.",
];
