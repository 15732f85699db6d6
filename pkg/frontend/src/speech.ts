// Commit-intent capture: the browser's speech facility when present, a
// typed fallback always.  Audio never leaves the browser; only the
// transcript is used.

export interface IntentResult {
  message: string;
  source: "typed" | "speech";
}

type SpeechRecognitionCtor = new () => {
  lang: string;
  interimResults: boolean;
  maxAlternatives: number;
  onresult: ((event: { results: { 0: { 0: { transcript: string } } } }) => void) | null;
  onerror: ((event: unknown) => void) | null;
  onend: (() => void) | null;
  start: () => void;
  stop: () => void;
};

export function speechRecognitionCtor(win: unknown = globalThis): SpeechRecognitionCtor | null {
  const w = win as Record<string, unknown>;
  return (w["SpeechRecognition"] as SpeechRecognitionCtor | undefined)
    ?? (w["webkitSpeechRecognition"] as SpeechRecognitionCtor | undefined)
    ?? null;
}

export function speechSupported(win: unknown = globalThis): boolean {
  return speechRecognitionCtor(win) !== null;
}

/** One-shot transcription; rejects when unsupported so callers fall back. */
export function recognizeOnce(win: unknown = globalThis, lang = "en-US"): Promise<string> {
  const Ctor = speechRecognitionCtor(win);
  if (!Ctor) {
    return Promise.reject(new Error("speech recognition unavailable"));
  }
  return new Promise((resolve, reject) => {
    const recognizer = new Ctor();
    recognizer.lang = lang;
    recognizer.interimResults = false;
    recognizer.maxAlternatives = 1;
    let settled = false;
    recognizer.onresult = (event) => {
      settled = true;
      resolve(event.results[0][0].transcript);
    };
    recognizer.onerror = (event) => {
      if (!settled) reject(new Error(`speech error: ${String(event)}`));
    };
    recognizer.onend = () => {
      if (!settled) reject(new Error("speech ended without a transcript"));
    };
    recognizer.start();
  });
}

/**
 * Capture a commit message.  Tries speech when asked and available;
 * any failure degrades to the typed text without surfacing an error.
 */
export async function captureIntent(
  typedText: () => string,
  wantSpeech: boolean,
  win: unknown = globalThis,
): Promise<IntentResult> {
  if (wantSpeech && speechSupported(win)) {
    try {
      const transcript = await recognizeOnce(win);
      if (transcript.trim()) {
        return { message: transcript.trim(), source: "speech" };
      }
    } catch {
      // degrade to typed below
    }
  }
  return { message: typedText(), source: "typed" };
}
