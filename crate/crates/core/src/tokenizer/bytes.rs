// GPT-2's reversible byte <-> printable-char table. Printable Latin-1 bytes
// map to themselves; the remaining 68 bytes map to U+0100 onward in order.

const fn is_printable(b: u8) -> bool {
    matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF)
}

const BYTE_TO_CHAR: [char; 256] = {
    let mut table = ['\0'; 256];
    let mut next = 0u32;
    let mut b = 0usize;
    while b < 256 {
        let c = if is_printable(b as u8) {
            b as u32
        } else {
            next += 1;
            255 + next
        };
        table[b] = match char::from_u32(c) {
            Some(c) => c,
            None => panic!("invalid code point"),
        };
        b += 1;
    }
    table
};

pub(super) fn byte_to_char(b: u8) -> char {
    BYTE_TO_CHAR[b as usize]
}

pub(super) fn char_to_byte(c: char) -> Option<u8> {
    let cp = c as u32;
    if cp < 256 && is_printable(cp as u8) {
        return Some(cp as u8);
    }
    if (256..256 + 68).contains(&cp) {
        let k = cp - 256;
        return (0..=255u8).filter(|&b| !is_printable(b)).nth(k as usize);
    }
    None
}
