//! Heuristic English syllable counting.

fn is_vowel(c: char, first: bool) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u') || (c == 'y' && !first)
}

/// Count syllables as vowel groups, then adjust for common silent endings:
///
/// * final silent `e` ("make"), restored for consonant + `le` ("table");
/// * `-ed` after anything but `t`/`d` ("based", but not "wanted");
/// * `-es` after anything but a sibilant ("makes", but not "boxes").
///
/// `y` is a vowel except word-initially. Non-alphabetic characters are ignored
/// and the result is never below 1.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return 1;
    }

    let mut groups = 0usize;
    let mut in_group = false;
    for (i, &c) in letters.iter().enumerate() {
        let v = is_vowel(c, i == 0);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }

    let n = letters.len();
    let ends = |suffix: &str| -> bool {
        let s: Vec<char> = suffix.chars().collect();
        n >= s.len() && letters[n - s.len()..] == s[..]
    };
    let consonant_at = |i: usize| !is_vowel(letters[i], i == 0);

    if n >= 3 && ends("e") && groups > 1 {
        let restore_le = ends("le") && consonant_at(n - 3);
        // "-ee", "-ie", "-oe", "-ye" form their own vowel group with the e.
        let vowel_pair = is_vowel(letters[n - 2], false);
        if !restore_le && !vowel_pair {
            groups -= 1;
        }
    } else if n >= 4 && ends("ed") && groups > 1 && consonant_at(n - 3) {
        if !matches!(letters[n - 3], 't' | 'd') {
            groups -= 1;
        }
    } else if n >= 4 && ends("es") && groups > 1 && consonant_at(n - 3) {
        let sibilant = matches!(letters[n - 3], 's' | 'x' | 'z' | 'c' | 'g')
            || (n >= 5 && matches!(&letters[n - 4..n - 2], ['c', 'h'] | ['s', 'h']));
        let le_plural = n >= 5 && letters[n - 3] == 'l' && consonant_at(n - 4);
        if !sibilant && !le_plural {
            groups -= 1;
        }
    }
    groups.max(1)
}
