//! Hand-checked sentence splitting cases: `(input, expected sentences)`.

pub const ETHIOPIC_SPLITS: &[(&str, &[&str])] = &[
    ("ሰላም። ከመይ ኣለኻ፧", &["ሰላም።", "ከመይ ኣለኻ፧"]),
    ("ሀ፡ለ፡ሐ", &["ሀ፡ለ፡ሐ"]),
    ("ኢትዮጵያ ትልቅ ሀገር ናት።", &["ኢትዮጵያ ትልቅ ሀገር ናት።"]),
    ("አንድ። ሁለት። ሦስት።", &["አንድ።", "ሁለት።", "ሦስት።"]),
    ("ምን ሆነ፧ ምንም።", &["ምን ሆነ፧", "ምንም።"]),
    ("ሰላም።ዓለም", &["ሰላም።ዓለም"]),
    ("ዜና፨ ቀጣይ ዜና።", &["ዜና፨", "ቀጣይ ዜና።"]),
    ("ሰላም! ደህና ነህ?", &["ሰላም!", "ደህና ነህ?"]),
    ("መንግስት «አዎ።» አለ። ቀጥሎ።", &["መንግስት «አዎ።»", "አለ።", "ቀጥሎ።"]),
    ("አንድ\nሁለት", &["አንድ", "ሁለት"]),
    ("አንድ።\n\nሁለት።", &["አንድ።", "ሁለት።"]),
    ("ሰላም። ቀሪ ጽሑፍ", &["ሰላም።", "ቀሪ ጽሑፍ"]),
    ("", &[]),
    ("።", &["።"]),
    ("ዶ/ር አበበ መጣ። ሄደ።", &["ዶ/ር አበበ መጣ።", "ሄደ።"]),
    ("ትግርኛ ቋንቋ እዩ። ኣብ ኤርትራ ይዝረብ።", &["ትግርኛ ቋንቋ እዩ።", "ኣብ ኤርትራ ይዝረብ።"]),
    ("እንታይ፧ ብኸመይ፧ መዓስ፧", &["እንታይ፧", "ብኸመይ፧", "መዓስ፧"]),
    ("ሰላም hello። ደህና።", &["ሰላም hello።", "ደህና።"]),
    ("ቃል፡ቃል። ቃል፡ቃል።", &["ቃል፡ቃል።", "ቃል፡ቃል።"]),
    ("(ሰላም።) ቀጥሎ", &["(ሰላም።)", "ቀጥሎ"]),
    ("ሀ፧፧ ለ", &["ሀ፧፧", "ለ"]),
    ("ዋጋው 3.5 ብር ነው። ርካሽ ነው።", &["ዋጋው 3.5 ብር ነው።", "ርካሽ ነው።"]),
    ("፨", &["፨"]),
];

pub const ENGLISH_SPLITS: &[(&str, &[&str])] = &[
    ("Dr. Smith arrived. He left.", &["Dr. Smith arrived.", "He left."]),
    ("Mr. and Mrs. Jones came home. They slept.", &["Mr. and Mrs. Jones came home.", "They slept."]),
    ("The U.S. economy grew. Prices rose.", &["The U.S. economy grew.", "Prices rose."]),
    ("J. R. R. Tolkien wrote books. Many read them.", &["J. R. R. Tolkien wrote books.", "Many read them."]),
    ("Is it true? Yes! It is.", &["Is it true?", "Yes!", "It is."]),
    ("He said \"stop.\" Then he left.", &["He said \"stop.\"", "Then he left."]),
    ("Version 3.14 is out. Update now.", &["Version 3.14 is out.", "Update now."]),
    ("e.g. apples are fruit. Bananas too.", &["e.g. apples are fruit.", "Bananas too."]),
    ("Meet at 5 p.m. tomorrow. Bring food.", &["Meet at 5 p.m. tomorrow.", "Bring food."]),
    ("Wait... what? OK.", &["Wait...", "what?", "OK."]),
    (
        "Prof. Lee teaches at Univ. of Addis Ababa. Students like her.",
        &["Prof. Lee teaches at Univ. of Addis Ababa.", "Students like her."],
    ),
    ("It costs $5. That is cheap.", &["It costs $5.", "That is cheap."]),
    ("No punctuation here", &["No punctuation here"]),
    ("First line\nSecond line", &["First line", "Second line"]),
    ("Visit example.com today. It is free.", &["Visit example.com today.", "It is free."]),
    ("(This is quoted.) Next one.", &["(This is quoted.)", "Next one."]),
    (
        "Gen. Tsadkan spoke on Jan. 5. The war ended.",
        &["Gen. Tsadkan spoke on Jan. 5.", "The war ended."],
    ),
    (
        "She works for Acme Inc. in Addis. She is happy.",
        &["She works for Acme Inc. in Addis.", "She is happy."],
    ),
    ("Really?!", &["Really?!"]),
    ("A. B. C.", &["A. B. C."]),
    ("St. Mary's church is old. It was built in 1900.", &["St. Mary's church is old.", "It was built in 1900."]),
    ("The vote was 5 vs. 3 in favor. It passed.", &["The vote was 5 vs. 3 in favor.", "It passed."]),
    ("", &[]),
    ("They met the U.N. envoy. Talks began.", &["They met the U.N. envoy.", "Talks began."]),
];
