// DOM rendering for the chat window: message viewport with a fixed height,
// quick-response bubbles, multipurpose search bar, help and restart.

import { ChatViewModel } from "./model";

const HELP_TEXT = `Type what you're looking for and press Send.
  +word        adds a keyword filter
  @name        shows a function's documentation
  @name#prop   shows one property
Click a function name or keyword to copy it into the search bar.
Quick-response bubbles send common requests with one click.
Restart clears the search and starts over.`;

export function mountChat(root: HTMLElement, model: ChatViewModel): void {
    root.innerHTML = `
      <div class="chat">
        <div class="chat-header">
          <span class="chat-title">API search</span>
          <span class="chat-reward" data-role="reward"></span>
          <button type="button" data-role="help">Help</button>
          <button type="button" data-role="restart">Restart</button>
        </div>
        <pre class="chat-help hidden" data-role="help-text"></pre>
        <div class="chat-messages" data-role="messages"></div>
        <div class="chat-quick" data-role="quick"></div>
        <div class="chat-notice" data-role="notice"></div>
        <form class="chat-input" data-role="form">
          <input type="text" data-role="input" autocomplete="off"
                 placeholder="Search, +keyword, or @function" />
          <button type="submit" data-role="send">Send</button>
        </form>
      </div>`;

    const messagesEl = root.querySelector<HTMLElement>('[data-role="messages"]')!;
    const quickEl = root.querySelector<HTMLElement>('[data-role="quick"]')!;
    const noticeEl = root.querySelector<HTMLElement>('[data-role="notice"]')!;
    const rewardEl = root.querySelector<HTMLElement>('[data-role="reward"]')!;
    const inputEl = root.querySelector<HTMLInputElement>('[data-role="input"]')!;
    const sendEl = root.querySelector<HTMLButtonElement>('[data-role="send"]')!;
    const formEl = root.querySelector<HTMLFormElement>('[data-role="form"]')!;
    const helpEl = root.querySelector<HTMLElement>('[data-role="help-text"]')!;
    helpEl.textContent = HELP_TEXT;

    root.querySelector('[data-role="help"]')!.addEventListener("click", () => {
        helpEl.classList.toggle("hidden");
    });
    root.querySelector('[data-role="restart"]')!.addEventListener("click", () => {
        void model.restart();
    });
    formEl.addEventListener("submit", (event) => {
        event.preventDefault();
        void model.send();
    });
    inputEl.addEventListener("input", () => {
        model.draft = inputEl.value;
    });

    function renderMessages() {
        messagesEl.innerHTML = "";
        for (const message of model.messages) {
            const bubble = document.createElement("div");
            bubble.className = `bubble bubble-${message.speaker}`;
            const text = document.createElement("div");
            text.className = "bubble-text";
            text.textContent = message.text;
            bubble.appendChild(text);
            if (message.clickables.length > 0) {
                const list = document.createElement("div");
                list.className = "bubble-items";
                for (const item of message.clickables) {
                    const btn = document.createElement("button");
                    btn.type = "button";
                    btn.className = "clickable-item";
                    btn.textContent = item;
                    btn.addEventListener("click", () => {
                        model.clickItem(item, message.clickablePrefix);
                    });
                    list.appendChild(btn);
                }
                bubble.appendChild(list);
            }
            messagesEl.appendChild(bubble);
        }
        messagesEl.scrollTop = messagesEl.scrollHeight;
    }

    function renderQuick() {
        quickEl.innerHTML = "";
        const last = model.messages[model.messages.length - 1];
        if (!last || last.speaker !== "system") {
            return;
        }
        for (const quick of last.quickResponses) {
            const btn = document.createElement("button");
            btn.type = "button";
            btn.className = "quick-bubble";
            btn.textContent = quick.label;
            btn.dataset.input = quick.input;
            btn.addEventListener("click", () => {
                void model.sendQuick(quick);
            });
            quickEl.appendChild(btn);
        }
    }

    function render() {
        renderMessages();
        renderQuick();
        noticeEl.textContent = model.notice;
        rewardEl.textContent = `reward ${model.runningReward.toFixed(1)} · turn ${model.turn}`;
        if (inputEl.value !== model.draft) {
            inputEl.value = model.draft;
        }
        const busy = model.status === "busy" || model.status === "connecting";
        sendEl.disabled = busy || model.terminal;
        inputEl.disabled = model.terminal;
    }

    model.onChange(render);
    render();
}
